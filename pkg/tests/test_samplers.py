import math

import numpy as np
import pytest
from scipy.optimize import brentq

from cutofflab.exceptions import NonFiniteError, PreconditionError, RejectionLimitError
from cutofflab.measures import IsotropicGaussian
from cutofflab.metrics import ensemble_moments
from cutofflab.potentials import Potential, logcosh, quadratic, quartic
from cutofflab.rng import RngStream
from cutofflab.samplers import (
    OracleStats,
    ProxSamplerConfig,
    lmc_gaussian_recursion,
    lmc_run,
    lmc_step,
    ou_flow,
    prox_gaussian_recursion,
    prox_point,
    prox_sampler_run,
    rgo_sample,
    rgo_sample_batch,
    sample_ensemble,
)

G = IsotropicGaussian.isotropic


def test_ou_flow_closed_form():
    law = ou_flow(G(2.0, 4.0), 1.0, 0.5)
    assert law.mean[0] == pytest.approx(2 * math.exp(-0.5))
    assert law.variance == pytest.approx(1 + 3 * math.exp(-1.0))
    assert ou_flow(G(2.0, 4.0), 1.0, 0.0) == G(2.0, 4.0)


def test_prox_recursion_fixed_point_and_mean_decay():
    law = prox_gaussian_recursion(G(4.0, 1.0), 1.0, 1.0, 3)
    assert law.mean[0] == pytest.approx(0.5)
    assert law.variance == pytest.approx(1.0)


def test_lmc_recursion_stationary_variance():
    law = lmc_gaussian_recursion(G(0.0, 1.0), 1.0, 0.5, 200)
    assert law.variance == pytest.approx(4 / 3, rel=1e-12)


def test_prox_point_quadratic_closed_form():
    res = prox_point(np.array([2.0]), quadratic(1.0), 1.0)
    assert res.xstar[0] == pytest.approx(1.0, abs=1e-10)


def test_prox_point_quartic_matches_bracketed_root():
    # minimizer of x^4/4 + (x - 1)^2 / 2 solves x^3 + x - 1 = 0
    root = brentq(lambda x: x**3 + x - 1, 0, 1, xtol=1e-15)
    res = prox_point(np.array([1.0]), quartic(), 1.0)
    assert res.xstar[0] == pytest.approx(root, abs=1e-9)


def test_prox_point_batch_equals_singles():
    ys = np.random.default_rng(0).normal(size=(7, 2)) * 3
    batch = prox_point(ys, quartic(2), 0.3).xstar
    single = np.array([prox_point(y, quartic(2), 0.3).xstar for y in ys])
    np.testing.assert_array_equal(batch, single)


def test_exact_oracle_moments_match_recursion():
    target = IsotropicGaussian.standard(1, 1.0)
    cfg = ProxSamplerConfig(1.0, target, oracle="exact-gaussian")
    ens = sample_ensemble(G(4.0, 0.0), 50_000, seed=1)
    for k in (1, 3):
        out = prox_sampler_run(ens, cfg, k)
        mom = ensemble_moments(out)
        law = prox_gaussian_recursion(G(4.0, 0.0), 1.0, 1.0, k)
        assert abs(mom.mean[0] - law.mean[0]) < 4 * mom.stderr_mean
        assert abs(mom.cov_trace_over_d - law.variance) < 4 * mom.stderr_var


def test_rejection_acceptance_rate_quadratic():
    # acceptance on a Gaussian target is exactly (1 + beta h)^(-d/2)
    cfg = ProxSamplerConfig(0.1, IsotropicGaussian.standard(10, 1.0), oracle="rejection")
    stats = OracleStats()
    y = np.random.default_rng(3).normal(size=(20_000, 10))
    rgo_sample_batch(y, cfg, seed=5, chain_ids=np.arange(20_000), step=0, stats=stats)
    p = stats.acceptance_rate
    se = math.sqrt(p * (1 - p) / stats.proposals)
    assert abs(p - 1.1 ** -5) < 4 * se


def test_rgo_single_matches_batch_row():
    cfg = ProxSamplerConfig(0.5, logcosh(2))
    y = np.array([[0.3, -1.0], [2.0, 1.0]])
    batch = rgo_sample_batch(y, cfg, seed=11, chain_ids=[0, 1], step=4)
    single = rgo_sample(y[1], cfg, RngStream(11, 1), step=4)
    np.testing.assert_array_equal(batch[1], single)


def test_rgo_logcosh_conditional_mean_by_quadrature():
    from scipy.integrate import quad
    h, y0 = 0.5, 1.3
    f = lambda x: math.exp(-(0.5 * x * x + math.log(math.cosh(x))) - (x - y0) ** 2 / (2 * h))
    z = quad(f, -20, 20)[0]
    mean = quad(lambda x: x * f(x), -20, 20)[0] / z
    cfg = ProxSamplerConfig(h, logcosh(1))
    n = 40_000
    x = rgo_sample_batch(np.full((n, 1), y0), cfg, seed=2, chain_ids=np.arange(n), step=0)
    assert abs(x.mean() - mean) < 4 * x.std() / math.sqrt(n)


@pytest.mark.parametrize("threads", [2, 5])
def test_runs_independent_of_thread_count(threads):
    ens = sample_ensemble(G(2.0, 1.0, 3), 999, seed=4)
    cfg = ProxSamplerConfig(0.4, logcosh(3))
    a = prox_sampler_run(ens, cfg, 3, threads=1).points
    b = prox_sampler_run(ens, cfg, 3, threads=threads).points
    np.testing.assert_array_equal(a, b)
    pot = quadratic(1.0, 3)
    np.testing.assert_array_equal(lmc_run(ens, pot, 0.1, 4, threads=1).points,
                                  lmc_run(ens, pot, 0.1, 4, threads=threads).points)


def test_lmc_step_matches_run():
    ens = sample_ensemble(G(1.0, 1.0, 2), 3, seed=8)
    out = lmc_run(ens, quadratic(1.0, 2), 0.2, 1)
    x1 = lmc_step(ens.points[2], quadratic(1.0, 2), 0.2, RngStream(8, 2), step=0)
    np.testing.assert_array_equal(out.points[2], x1)


def test_preconditions():
    with pytest.raises(PreconditionError):
        ProxSamplerConfig(1.0, quartic(1), oracle="rejection")
    with pytest.raises(PreconditionError):
        ProxSamplerConfig(1.0, logcosh(1), oracle="exact-gaussian")
    ens = sample_ensemble(G(0.0, 1.0), 4, seed=0)
    with pytest.raises(PreconditionError):
        lmc_run(ens, quadratic(1.0), 2.5, 1)


def test_non_finite_gradient_reported():
    bad = Potential(1, lambda x: np.sum(x, -1), lambda x: np.full_like(x, np.nan), 0.0, 1.0)
    ens = sample_ensemble(G(0.0, 1.0), 4, seed=0)
    with pytest.raises(NonFiniteError):
        lmc_run(ens, bad, 0.1, 1)


def test_rejection_limit_error_names_chain():
    cfg = ProxSamplerConfig(50.0, IsotropicGaussian.standard(200, 1.0), max_rejection_rounds=2)
    with pytest.raises(RejectionLimitError) as err:
        rgo_sample_batch(np.zeros((3, 200)), cfg, seed=0, chain_ids=[7, 8, 9], step=1)
    assert err.value.chain in (7, 8, 9) and err.value.step == 1
