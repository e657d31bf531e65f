"""Acceptance gate: one test and one PASS/FAIL line per criterion."""

import math
import time

import numpy as np
from scipy.special import ndtri

from conftest import record
from cutofflab.experiments import Scenario, cutoff_sweep, run_scenario
from cutofflab.inequalities import (
    HatCp,
    build_interpolation,
    check_chi2_contraction_prox,
    check_lpi_langevin,
    check_lpi_prox,
    check_parabolic_reg_ld,
    check_parabolic_reg_prox,
    check_window_bound_ld,
    check_window_bound_prox,
    check_wtv,
)
from cutofflab.measures import GridMeasure1D, IsotropicGaussian, gaussian_kl
from cutofflab.metrics import energy_distance_test, ensemble_moments
from cutofflab.potentials import gaussian_potential
from cutofflab.profiles import profile_closed_form_meanshift, profile_prox_recursion
from cutofflab.samplers import (
    OracleStats,
    ProxSamplerConfig,
    lmc_run,
    prox_gaussian_recursion,
    prox_sampler_run,
    sample_ensemble,
)
from cutofflab.suites import random_grid_pair, run_suites

G = IsotropicGaussian.isotropic
Z25, Z75 = float(ndtri(0.625)), float(ndtri(0.875))
WINDOW = math.log(Z75 / Z25)


def _violations(reports):
    return sum(not r.holds for r in reports)


def test_01_wtv_inequality():
    start = time.perf_counter()
    gen = np.random.default_rng(2024)
    reports = []
    for i in range(1000):
        d = (1, 2, 5)[i % 3]
        p = IsotropicGaussian(gen.uniform(-3, 3, d), gen.uniform(0.25, 4))
        q = IsotropicGaussian(gen.uniform(-3, 3, d), gen.uniform(0.25, 4))
        reports.append(check_wtv(p, q))
    for _ in range(200):
        reports.append(check_wtv(*random_grid_pair(gen)))
    elapsed = time.perf_counter() - start
    bad = _violations(reports)
    assert all(r.tol == 1e-9 for r in reports)
    ok = bad == 0 and elapsed < 30
    record(1, "W-TV inequality", ok,
           f"{len(reports)} pairs, {bad} violations at tol 1e-9, {elapsed:.2f} s (< 30 s)")
    assert ok


def test_02_interpolation_saturation():
    a = GridMeasure1D.uniform(0, 1, -1, 2, 300)
    b = GridMeasure1D.uniform(0.5, 1.5, -1, 2, 300)
    itp = build_interpolation(a, b)
    sat = max(abs(itp.ratio_a - 2), abs(itp.ratio_b - 2), abs(itp.bound - 2),
              abs(1 / (1 - itp.tv) - 2))
    gen = np.random.default_rng(7)
    worst = -math.inf
    for _ in range(200):
        it = build_interpolation(*random_grid_pair(gen))
        worst = max(worst, it.ratio_a - it.bound, it.ratio_b - it.bound)
    ok = sat <= 1e-12 and worst <= 1e-12
    record(2, "interpolation construction", ok,
           f"saturation error {sat:.1e}, worst ratio - bound over 200 pairs {worst:.1e} (<= 1e-12)")
    assert ok


def test_03_parabolic_regularization():
    gen = np.random.default_rng(3)
    ts = np.geomspace(1e-3, 50, 60)
    reports = []
    for _ in range(50):
        s2 = gen.uniform(0.25, 4)
        init = IsotropicGaussian(gen.uniform(-3, 3, int(gen.choice((1, 2, 5)))),
                                 gen.uniform(0.0, 4))
        reports += check_parabolic_reg_ld(init, s2, ts)
        for h in (0.1, 0.5, 1.0, 2.0):
            reports += check_parabolic_reg_prox(init, s2, h, range(1, 51))
    [ld] = check_parabolic_reg_ld(G(2, 1), 1.0, [1.0])
    [px] = check_parabolic_reg_prox(G(4, 1), 1.0, 1.0, [1])
    spots = (round(ld.lhs, 5), round(ld.rhs, 5), round(px.lhs, 5), round(px.rhs, 5))
    want = (round(2 * math.exp(-2), 5), 1.0, 2.0, 16.0)
    bad = _violations(reports)
    ok = bad == 0 and spots == want
    record(3, "parabolic regularization", ok,
           f"{len(reports)} instances, {bad} violations; spot values {spots} vs {want}")
    assert ok


def test_04_chi2_contraction():
    reports, gap = [], -math.inf
    for m0 in np.linspace(-3, 3, 13):
        for h in (0.05, 0.1, 0.5, 1.0, 2.0, 5.0):
            for k in range(0, 31):
                r = check_chi2_contraction_prox(G(float(m0), 1.0), 1.0, h, k)
                reports.append(r)
                gap = max(gap, r.rhs - r.context["rhs_exp"])
    bad = _violations(reports)
    ok = bad == 0 and gap <= 1e-12
    record(4, "chi-squared contraction", ok,
           f"{len(reports)} instances, {bad} violations, max(power - exp) {gap:.1e} (<= 1e-12)")
    assert ok


def test_05_local_poincare():
    gen = np.random.default_rng(5)
    reports, eq = [], 0.0
    for _ in range(50):
        s2 = gen.uniform(0.25, 4)
        init = IsotropicGaussian(gen.uniform(-3, 3, int(gen.choice((1, 2, 5)))),
                                 gen.uniform(0.0, 4))
        ld = check_lpi_langevin(init, s2, np.concatenate([[0.0], np.geomspace(1e-3, 50, 40)]))
        h = float(gen.choice((0.1, 0.5, 1.0)))
        px = check_lpi_prox(init, s2, h, range(0, 31))
        eq = max(eq, abs(ld[0].lhs - ld[0].rhs), abs(px[0].lhs - px[0].rhs))
        reports += ld + px
    bad = _violations(reports)
    ok = bad == 0 and eq <= 1e-12
    record(5, "local Poincare inequalities", ok,
           f"{len(reports)} instances, {bad} violations, t=0/k=0 equality error {eq:.1e}")
    assert ok


def test_06_window_bounds():
    worst, reports = 0.0, []
    for d in (1e2, 1e4, 1e6):
        prof = profile_closed_form_meanshift(1.0, 1.0, d)
        r = check_window_bound_ld(prof, 1.0, 1.0, 0.25)
        reports.append(r)
        worst = max(worst, abs(r.lhs - WINDOW))
    for h in (0.1, 1.0):
        for m0 in (1.0, 4.0, 10.0):
            init = G(m0, 1.0)
            k_max = 3 * math.ceil(HatCp.of(1.0, h).value * (1 + gaussian_kl(init, G(0, 1))) / 0.25)
            prof = profile_prox_recursion(init, 1.0, h, k_max)
            reports.append(check_window_bound_prox(prof, HatCp.of(1, h), HatCp.of(1, h), 0.25))
    bad = _violations(reports)
    ok = bad == 0 and worst <= 1e-5
    record(6, "window bounds", ok,
           f"window {reports[0].lhs:.7f} (constant {WINDOW:.7f}, max dev {worst:.1e}), "
           f"{bad} violations over {len(reports)} continuous and discrete checks")
    assert ok


def test_07_cutoff_sweep():
    start = time.perf_counter()
    ds = [10.0**k for k in range(2, 13)]
    rows, reports = cutoff_sweep(1.0, 1.0, ds, 0.25)
    elapsed = time.perf_counter() - start
    by_d = {r.d: r for r in rows}
    r6, r12 = by_d[1e6].ratio, by_d[1e12].ratio
    ratios = [r.ratio for r in rows]
    mono = all(a <= b for a, b in zip(ratios, ratios[1:]))
    # t_mix / C_P grows like (log d)/2: slope in log d of the mixing time itself
    slope = (by_d[1e12].tmix_eps - by_d[1e6].tmix_eps) / math.log(1e6)
    prod_up = all(a < b for a, b in zip([r.product_ratio for r in rows],
                                        [r.product_ratio for r in rows][1:]))
    ok = (abs(r6 - 0.8256) <= 1e-3 and abs(r12 - 0.9101) <= 1e-3 and mono and prod_up
          and abs(slope - 0.5) <= 1e-3 and elapsed < 5 and _violations(reports) == 0)
    record(7, "cutoff sweep", ok,
           f"ratio {r6:.6f} at 1e6, {r12:.6f} at 1e12, nondecreasing={mono}, "
           f"t_mix slope in log d {slope:.6f}, {elapsed:.2f} s")
    assert ok


def test_08_sampler_correctness():
    start = time.perf_counter()
    d, s2, h, k = 2, 1.0, 1.0, 10
    init_law = G(3.0, 1.0, d)
    cfg = ProxSamplerConfig(h, G(0.0, s2, d), oracle="exact-gaussian")
    worst = [0.0]

    def check(step, pts):
        law = prox_gaussian_recursion(init_law, s2, h, step)
        n = pts.shape[0]
        mean = pts.mean(axis=0)
        z = np.mean((pts - mean) ** 2, axis=1)
        var = z.sum() / (n - 1)
        dev = max(np.max(np.abs(mean - law.mean)) / math.sqrt(var / n),
                  abs(var - law.variance) / (z.std(ddof=1) / math.sqrt(n)))
        worst[0] = max(worst[0], dev)

    prox_sampler_run(sample_ensemble(init_law, 100_000, seed=8), cfg, k, threads=4, callback=check)
    elapsed = time.perf_counter() - start

    # rejection oracle vs exact oracle on the quadratic target
    pot = gaussian_potential(np.zeros(d), s2)
    rej = prox_sampler_run(sample_ensemble(init_law, 600, seed=81),
                           ProxSamplerConfig(h, pot, oracle="rejection"), 3)
    exa = prox_sampler_run(sample_ensemble(init_law, 600, seed=82), cfg, 3)
    energy = energy_distance_test(rej.points, exa.points, n_perm=499, level=0.99, seed=1)

    stats = OracleStats()
    prox_sampler_run(sample_ensemble(G(0.0, 1.0, 10), 20_000, seed=83),
                     ProxSamplerConfig(0.1, gaussian_potential(np.zeros(10), 1.0),
                                       oracle="rejection"), 3, stats=stats)
    p = stats.acceptance_rate
    se = math.sqrt(p * (1 - p) / stats.proposals)
    envelope = 1.1 ** -5
    ok = worst[0] <= 3 and elapsed < 60 and energy.passed and p >= envelope - 3 * se
    record(8, "sampler correctness", ok,
           f"max moment deviation {worst[0]:.2f} stderr over k<=10 ({elapsed:.1f} s); "
           f"energy test p={energy.p_value:.3f}; acceptance {p:.4f} vs {envelope:.4f} - 3*{se:.4f}")
    assert ok


def test_09_lmc_bias_floor():
    h, s2 = 0.5, 1.0
    chains, steps = 25_000, 40
    pot = gaussian_potential(np.zeros(1), s2)
    final = lmc_run(sample_ensemble(G(3.0, 1.0), chains, seed=9), pot, h, steps, threads=4)
    mom = ensemble_moments(final)
    target = s2 / (1 - h / (2 * s2))
    dev = abs(mom.cov_trace_over_d - target) / mom.stderr_var
    ok = dev <= 3 and abs(target - 4 / 3) < 1e-15
    record(9, "LMC bias floor", ok,
           f"stationary variance {mom.cov_trace_over_d:.5f} vs 4/3 ({dev:.2f} stderr), "
           f"{chains * steps} total steps")
    assert ok


def test_10_determinism(tmp_path):
    scenarios = [
        Scenario("a", "ou-mean-shift", {"d_list": "1e2 1e6"}),
        Scenario("b", "ou-general-gaussian", {"grid": 60}),
        Scenario("c", "prox-gaussian", {"k_steps": 6, "chains": 3000}, seed=10),
        Scenario("d", "prox-gaussian", {"k_steps": 4, "chains": 1500, "oracle": "rejection"},
                 seed=11),
        Scenario("e", "prox-general", {"k_steps": 4, "chains": 1000}, seed=12),
        Scenario("f", "lmc-gaussian", {"k_steps": 8, "chains": 3000}, seed=13),
    ]
    mismatches, files = [], 0
    for sc in scenarios:
        outs = [tmp_path / f"{sc.name}-{t}" for t in (1, 4, 8)]
        for t, out in zip((1, 4, 8), outs):
            run_scenario(sc, out, threads=t)
        for csv in sorted(outs[0].glob("*.csv")):
            files += 1
            ref = csv.read_bytes()
            if any((o / csv.name).read_bytes() != ref for o in outs[1:]):
                mismatches.append(f"{sc.name}/{csv.name}")
        # a second run at the same thread count must match as well
        again = tmp_path / f"{sc.name}-again"
        run_scenario(sc, again, threads=4)
        for csv in outs[0].glob("*.csv"):
            if (again / csv.name).read_bytes() != csv.read_bytes():
                mismatches.append(f"{sc.name}/{csv.name} rerun")
    ok = not mismatches and files >= 2 * len(scenarios)
    record(10, "determinism", ok,
           f"{files} CSV files across threads 1/4/8, mismatches: {mismatches or 'none'}")
    assert ok


def test_suites_clean_at_default_scale():
    # the CLI suite run covers the same ground with its own seeds
    results = run_suites(seed=0, threads=4)
    assert sum(_violations(r) for r in results.values()) == 0
