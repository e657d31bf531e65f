"""Seeded randomized suites over every inequality check.

Each suite draws its instances from a ``numpy.random.Generator`` seeded by
``(seed, suite index)``, so adding or reordering suites never changes the draws of
another.  Results keep the order of generation regardless of thread count.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, NamedTuple

import numpy as np

from .inequalities import (
    HatCp,
    InequalityReport,
    build_interpolation,
    check_chi2_contraction_prox,
    check_lpi_langevin,
    check_lpi_prox,
    check_mixing_bound_ld,
    check_mixing_bound_prox,
    check_parabolic_reg_ld,
    check_parabolic_reg_prox,
    check_transport_variance,
    check_window_bound_ld,
    check_window_bound_prox,
    check_wtv,
)
from .measures import GridMeasure1D, IsotropicGaussian, gaussian_kl
from .profiles import meanshift_kl0, profile_closed_form_meanshift, profile_prox_recursion

__all__ = ["SUITE_DEFAULTS", "SUITES", "SuiteSummary", "random_gaussian_pair", "random_grid_pair",
           "run_suites", "summarize"]

log = logging.getLogger(__name__)

SUITE_DEFAULTS = {
    "n_gaussian_pairs": 1000,
    "n_grid_pairs": 200,
    "n_inits": 50,
    "rhs_scale": 1.0,
    "suites": "all",
}

GRID = (-10.0, 10.0, 400)


def random_gaussian_pair(gen: np.random.Generator, dims=(1, 2, 5)):
    d = int(gen.choice(dims))
    a = IsotropicGaussian(gen.uniform(-3, 3, d), gen.uniform(0.25, 4))
    b = IsotropicGaussian(gen.uniform(-3, 3, d), gen.uniform(0.25, 4))
    return a, b


def _random_grid_measure(gen: np.random.Generator) -> GridMeasure1D:
    lo, hi, n = GRID
    kind = gen.integers(3)
    if kind == 0:
        return GridMeasure1D.gaussian(gen.uniform(-3, 3), gen.uniform(0.25, 4), lo, hi, n)
    if kind == 1:
        a = gen.uniform(-4, 3)
        return GridMeasure1D.uniform(a, a + gen.uniform(0.5, 4), lo, hi, n)
    # two-component Gaussian mixture
    m, v, w = gen.uniform(-3, 3, 2), gen.uniform(0.25, 2, 2), gen.uniform(0.2, 0.8)
    comps = [GridMeasure1D.gaussian(m[i], v[i], lo, hi, n).weights for i in range(2)]
    return GridMeasure1D.from_masses(lo, hi, w * comps[0] + (1 - w) * comps[1])


def random_grid_pair(gen: np.random.Generator):
    """Two grid measures on a shared grid with overlapping supports."""
    while True:
        a, b = _random_grid_measure(gen), _random_grid_measure(gen)
        if np.minimum(a.weights, b.weights).sum() > 1e-6:
            return a, b


def _random_init(gen: np.random.Generator, sigma2: float, chi2_finite: bool = False):
    d = int(gen.choice((1, 3)))
    hi = 1.99 * sigma2 if chi2_finite else 4.0
    var = 0.0 if (not chi2_finite and gen.random() < 0.1) else gen.uniform(0.05, hi)
    return IsotropicGaussian(gen.uniform(-4, 4, d), var)


# --------------------------------------------------------------------------- #
# suites; each returns a list of reports


def suite_wtv_gaussian(gen, cfg):
    return [check_wtv(*random_gaussian_pair(gen)) for _ in range(cfg["n_gaussian_pairs"])]


def suite_wtv_grid(gen, cfg):
    return [check_wtv(*random_grid_pair(gen)) for _ in range(cfg["n_grid_pairs"])]


def suite_interpolation(gen, cfg):
    out = []
    for _ in range(cfg["n_grid_pairs"]):
        itp = build_interpolation(*random_grid_pair(gen))
        ctx = {"tv": itp.tv}
        out.append(InequalityReport("interpolation_ratio_a", itp.ratio_a, itp.bound, "grid",
                                    "grid", ctx, tol=1e-12))
        out.append(InequalityReport("interpolation_ratio_b", itp.ratio_b, itp.bound, "grid",
                                    "grid", ctx, tol=1e-12))
    return out


def suite_transport_variance(gen, cfg):
    out = []
    for _ in range(cfg["n_gaussian_pairs"]):
        d = int(gen.choice((1, 2, 5)))
        mu_var = gen.uniform(0.25, 4)
        mu = IsotropicGaussian(gen.uniform(-3, 3, d), mu_var)
        nu = IsotropicGaussian(gen.uniform(-3, 3, d), gen.uniform(0.25, min(4, 2 * mu_var) * 0.999))
        out.append(check_transport_variance(mu, nu))
    return out


def suite_parabolic_ld(gen, cfg):
    t_grid = np.geomspace(1e-3, 50, 40)
    out = []
    for _ in range(cfg["n_inits"]):
        s2 = gen.uniform(0.25, 4)
        out += check_parabolic_reg_ld(_random_init(gen, s2), s2, t_grid)
    return out


def suite_parabolic_prox(gen, cfg):
    out = []
    for _ in range(cfg["n_inits"]):
        s2, h = gen.uniform(0.25, 4), float(gen.choice((0.1, 0.5, 1.0, 2.0)))
        out += check_parabolic_reg_prox(_random_init(gen, s2), s2, h, range(1, 51))
    return out


def suite_chi2_contraction(gen, cfg):
    out = []
    for m0 in (0.0, 0.5, 1.0, 2.0, 3.0):
        for h in (0.1, 1.0, 10.0):
            for k in (0, 1, 2, 5, 10, 20):
                init = IsotropicGaussian.isotropic(m0, 1.0, 1)
                rep = check_chi2_contraction_prox(init, 1.0, h, k)
                out.append(rep)
                out.append(InequalityReport("chi2_power_vs_exp", rep.rhs, rep.context["rhs_exp"],
                                            "closed-form", "closed-form", dict(rep.context),
                                            tol=1e-12))
    for _ in range(cfg["n_inits"]):
        s2 = gen.uniform(0.25, 4)
        init = _random_init(gen, s2, chi2_finite=True)
        out.append(check_chi2_contraction_prox(init, s2, float(gen.choice((0.1, 1.0, 10.0))),
                                               int(gen.integers(0, 30))))
    return out


def suite_lpi(gen, cfg):
    out = []
    for _ in range(cfg["n_inits"]):
        s2 = gen.uniform(0.25, 4)
        init = _random_init(gen, s2)
        out += check_lpi_langevin(init, s2, np.concatenate([[0.0], np.geomspace(1e-3, 50, 30)]))
        out += check_lpi_prox(init, s2, float(gen.choice((0.1, 0.5, 1.0))), range(0, 21))
    return out


def suite_mixing_window(gen, cfg):
    out = []
    for d in (1e2, 1e4, 1e6):
        for eps in (0.05, 0.1, 0.25):
            for sigma2 in (0.5, 1.0, 2.0):
                a = 1.0
                prof = profile_closed_form_meanshift(a, sigma2, d, eps_min=eps)
                out.append(check_mixing_bound_ld(prof, sigma2, meanshift_kl0(a, sigma2, d), eps,
                                                 w2_0=a * a * d))
                out.append(check_window_bound_ld(prof, sigma2, sigma2, eps))
    for h in (0.1, 1.0):
        for m0 in (1.0, 4.0):
            init = IsotropicGaussian.isotropic(m0, 1.0, 1)
            target = IsotropicGaussian.standard(1, 1.0)
            kl0 = gaussian_kl(init, target)
            hat = HatCp.of(1.0, h)
            for eps in (0.05, 0.1, 0.25):
                k_max = 3 * math.ceil(hat.value * (1 + kl0) / eps)
                prof = profile_prox_recursion(init, 1.0, h, k_max)
                out.append(check_mixing_bound_prox(prof, hat, kl0, eps, w2_0=m0 * m0, h=h))
                out.append(check_window_bound_prox(prof, hat, hat, eps))
    return out


SUITES: dict[str, Callable] = {
    "wtv_gaussian": suite_wtv_gaussian,
    "wtv_grid": suite_wtv_grid,
    "interpolation": suite_interpolation,
    "transport_variance": suite_transport_variance,
    "parabolic_ld": suite_parabolic_ld,
    "parabolic_prox": suite_parabolic_prox,
    "chi2_contraction": suite_chi2_contraction,
    "local_poincare": suite_lpi,
    "mixing_window": suite_mixing_window,
}


def _selected(spec: str) -> list[str]:
    if spec.strip() in ("", "all"):
        return list(SUITES)
    names = [s.strip() for s in spec.replace(",", " ").split()]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    return names


def run_suites(seed: int = 0, threads: int = 1, **cfg) -> dict[str, list[InequalityReport]]:
    """Run the selected suites; ``rhs_scale`` multiplies every right-hand side (test hook)."""
    cfg = {**SUITE_DEFAULTS, **cfg}
    names = _selected(str(cfg["suites"]))
    index = {n: i for i, n in enumerate(SUITES)}

    def one(name):
        gen = np.random.default_rng([int(seed), index[name]])
        reports = SUITES[name](gen, cfg)
        if cfg["rhs_scale"] != 1.0:
            reports = [r.scaled(float(cfg["rhs_scale"])) for r in reports]
        return reports

    if threads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, names))
    else:
        results = [one(n) for n in names]
    return dict(zip(names, results))


class SuiteSummary(NamedTuple):
    suite: str
    instances: int
    min_slack: float
    vacuous: int
    violations: int


def summarize(results: dict[str, list[InequalityReport]]) -> list[SuiteSummary]:
    rows = []
    for name, reps in results.items():
        finite = [r.slack for r in reps if not r.vacuous]
        rows.append(SuiteSummary(name, len(reps), min(finite) if finite else math.inf,
                                 sum(r.vacuous for r in reps), sum(not r.holds for r in reps)))
        log.info("suite %s: %d instances, min slack %r", name, len(reps), rows[-1].min_slack)
    return rows
