import numpy as np
import pytest
from scipy.special import ndtr

from cutofflab.exceptions import PreconditionError
from cutofflab.measures import IsotropicGaussian, gaussian_tv
from cutofflab.metrics import (
    DivergenceEstimate,
    energy_distance_test,
    ensemble_moments,
    ensemble_tv_vs_cdf,
    ensemble_tv_vs_gaussian,
    tv_mc_exact_density,
)
from cutofflab.rng import RngStream
from cutofflab.samplers import sample_ensemble


def _sampler(law):
    def draw(rng, n):
        return law.mean + law.std * np.stack([rng.spawn(i).normal(law.dim) for i in range(n)])
    return draw


def _fast_sampler(law):
    from cutofflab.rng import batch_normal

    def draw(rng, n):
        return law.mean + law.std * batch_normal(rng.seed, np.arange(n), law.dim)
    return draw


def test_mc_exact_density_within_three_stderr_on_random_pairs():
    gen = np.random.default_rng(12)
    misses = 0
    for i in range(100):
        d = int(gen.choice((1, 2, 3)))
        v = gen.uniform(0.25, 4)
        p = IsotropicGaussian(gen.uniform(-2, 2, d), v)
        q = IsotropicGaussian(gen.uniform(-2, 2, d), v)
        est = tv_mc_exact_density(p.pdf, q.pdf, _fast_sampler(q), 4000, RngStream(i))
        if abs(est.value - gaussian_tv(p, q)) > 3 * est.stderr:
            misses += 1
    assert misses <= 3


def test_mc_exact_density_identical_laws_degenerate():
    q = IsotropicGaussian.isotropic(0.0, 1.0)
    est = tv_mc_exact_density(q.pdf, q.pdf, _fast_sampler(q), 1000, RngStream(0))
    assert est.value == 0.0 and est.stderr == 0.0


def test_mc_requires_enough_samples():
    q = IsotropicGaussian.isotropic(0.0, 1.0)
    with pytest.raises(PreconditionError):
        tv_mc_exact_density(q.pdf, q.pdf, _sampler(q), 10, RngStream(0))


def test_exact_methods_carry_no_stderr():
    with pytest.raises(ValueError):
        DivergenceEstimate(0.1, 0.01, 0, "closed-form")
    with pytest.raises(ValueError):
        DivergenceEstimate(0.1, 0.0, 0, "guess")


def test_ensemble_moments_against_law():
    law = IsotropicGaussian([1.0, -1.0], 2.0)
    mom = ensemble_moments(sample_ensemble(law, 100_000, seed=3))
    assert np.all(np.abs(mom.mean - law.mean) < 4 * mom.stderr_mean)
    assert abs(mom.cov_trace_over_d - 2.0) < 4 * mom.stderr_var


def test_histogram_tv_tracks_closed_form():
    ref = IsotropicGaussian.isotropic(0.0, 1.0)
    law = IsotropicGaussian.isotropic(1.0, 1.0)
    ens = sample_ensemble(law, 50_000, seed=1)
    est = ensemble_tv_vs_gaussian(ens, ref, bins=60)
    assert est.method == "histogram" and est.caveat
    assert abs(est.value - gaussian_tv(law, ref)) < 3 * est.stderr


def test_histogram_tv_projection_needs_direction():
    ens = sample_ensemble(IsotropicGaussian.isotropic(0.0, 1.0, 2), 100, seed=0)
    with pytest.raises(PreconditionError):
        ensemble_tv_vs_gaussian(ens, IsotropicGaussian.standard(2), bins=20)


def test_histogram_requires_bins():
    with pytest.raises(PreconditionError):
        ensemble_tv_vs_cdf(np.zeros(10), ndtr, 5, (-1, 1))


def test_energy_test_accepts_same_law_rejects_shift():
    gen = np.random.default_rng(0)
    x, y = gen.normal(size=(300, 2)), gen.normal(size=(300, 2))
    assert energy_distance_test(x, y, n_perm=199).passed
    assert not energy_distance_test(x, y + 0.5, n_perm=199).passed
