"""Scenario runner: profiles, cutoff sweeps, inequality reports and persisted artifacts."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import platform
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import ndtr

from . import __version__
from .exceptions import ConfigError, PreconditionError
from .inequalities import (
    HatCp,
    InequalityReport,
    check_lpi_langevin,
    check_lpi_prox,
    check_mixing_bound_ld,
    check_mixing_bound_prox,
    check_parabolic_reg_ld,
    check_parabolic_reg_prox,
    check_window_bound_ld,
    check_window_bound_prox,
    cutoff_ratio,
    product_condition,
)
from .measures import (
    GridMeasure1D,
    IsotropicGaussian,
    gaussian_kl,
    gaussian_tv,
    gaussian_w2,
    poincare_grid_1d,
)
from .metrics import ensemble_moments, ensemble_tv_vs_cdf
from .potentials import logcosh, quadratic
from .profiles import (
    MixingProfile,
    geometric_time_grid,
    measure_tmix,
    meanshift_kl0,
    profile_closed_form_meanshift,
    profile_ou_gaussian,
    profile_prox_meanshift,
)
from .samplers import (
    EnsembleMeta,
    OracleStats,
    ParticleEnsemble,
    ProxSamplerConfig,
    lmc_gaussian_recursion,
    lmc_run,
    prox_gaussian_recursion,
    prox_sampler_run,
    sample_ensemble,
)

__all__ = [
    "FAMILIES",
    "RunManifest",
    "Scenario",
    "SimulationResult",
    "SweepRow",
    "cutoff_sweep",
    "exact_profile",
    "initial_law",
    "profile_simulation",
    "resolve_steps",
    "run_scenario",
]

log = logging.getLogger(__name__)

_AUTO = "auto"

# default parameters per family; the default's type fixes how overrides are parsed
FAMILIES: dict[str, dict] = {
    "ou-mean-shift": {"sigma2": 1.0, "a": 1.0, "d": 1_000_000, "d_list": "", "h": 0.0,
                      "horizon": _AUTO, "grid": 400},
    "ou-general-gaussian": {"sigma2": 1.0, "m0": 2.0, "s0sq": 4.0, "d": 1, "horizon": _AUTO,
                            "grid": 200},
    "prox-gaussian": {"sigma2": 1.0, "h": 1.0, "m0": 4.0, "s0sq": 1.0, "d": 1, "k_steps": _AUTO,
                      "chains": 20_000, "oracle": "exact-gaussian", "bins": 60},
    "prox-general": {"h": 0.5, "m0": 2.0, "s0sq": 1.0, "d": 1, "k_steps": _AUTO, "chains": 10_000,
                     "bins": 60},
    "lmc-gaussian": {"sigma2": 1.0, "h": 0.5, "m0": 3.0, "s0sq": 1.0, "d": 1, "k_steps": _AUTO,
                     "chains": 20_000, "bins": 60},
}
SIMULATED = ("prox-gaussian", "prox-general", "lmc-gaussian")


def _parse_value(key: str, raw, default):
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    try:
        if default == _AUTO:
            return _AUTO if raw.lower() == _AUTO else float(raw)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"parameter {key!r}: cannot parse {raw!r}") from None
    return raw


def _parse_eps(raw) -> tuple[float, ...]:
    if isinstance(raw, str):
        try:
            raw = [float(x) for x in raw.replace(",", " ").split()]
        except ValueError:
            raise ConfigError(f"cannot parse epsilon list {raw!r}") from None
    eps = tuple(float(e) for e in raw)
    if not eps or any(not 0 < e < 1 for e in eps):
        raise ConfigError("epsilon values must lie in (0, 1)")
    return eps


@dataclass(frozen=True)
class Scenario:
    """A named, seeded configuration of one experiment family.

    ``params`` is completed with the family defaults; unknown keys are rejected.
    """

    name: str
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    eps: tuple = (0.25,)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; choose from {sorted(FAMILIES)}")
        defaults = FAMILIES[self.family]
        unknown = sorted(set(self.params) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {self.family}: {', '.join(unknown)}")
        merged = {k: _parse_value(k, self.params.get(k, v), v) for k, v in defaults.items()}
        object.__setattr__(self, "params", merged)
        object.__setattr__(self, "eps", _parse_eps(self.eps))
        object.__setattr__(self, "seed", int(self.seed))
        self._validate()

    def _validate(self):
        p = self.params
        for key in ("sigma2", "s0sq", "h"):
            if key in p and (p[key] < 0 or (key == "sigma2" and p[key] == 0)):
                raise ConfigError(f"{key} must be positive")
        if self.family in SIMULATED or self.family == "ou-general-gaussian":
            if p["d"] < 1:
                raise ConfigError("d must be >= 1")
        if self.family in SIMULATED:
            if p["h"] <= 0 or p["chains"] < 2 or p["bins"] < 10:
                raise ConfigError("need h > 0, chains >= 2 and bins >= 10")
        if self.family == "lmc-gaussian" and not p["h"] < 2 * p["sigma2"]:
            raise ConfigError("LMC on a quadratic target needs h < 2 sigma2")
        if self.family == "prox-gaussian" and p["oracle"] not in ("exact-gaussian", "rejection"):
            raise ConfigError("oracle must be exact-gaussian or rejection")
        if self.family == "ou-mean-shift":
            if p["a"] == 0 or p["d"] < 1:
                raise ConfigError("mean shift needs a != 0 and d >= 1")
            self.d_list

    @property
    def d_list(self) -> list[float]:
        raw = str(self.params.get("d_list", "")).replace(",", " ").split()
        try:
            ds = [float(x) for x in raw]
        except ValueError:
            raise ConfigError(f"cannot parse d_list {self.params['d_list']!r}") from None
        if any(d < 1 for d in ds):
            raise ConfigError("dimensions must be >= 1")
        return ds

    @property
    def thresholds(self) -> list[float]:
        """Requested epsilons together with their complements ``1 - eps``."""
        return sorted(set(self.eps) | {round(1.0 - e, 15) for e in self.eps})

    @property
    def window_eps(self) -> list[float]:
        return sorted({min(e, 1.0 - e) for e in self.eps if e != 0.5})

    def digest(self) -> str:
        cfg = {"name": self.name, "family": self.family, "params": self.params,
               "seed": self.seed, "eps": list(self.eps)}
        return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# --------------------------------------------------------------------------- #
# laws and reference quantities


def initial_law(p: dict) -> IsotropicGaussian:
    return IsotropicGaussian.isotropic(p["m0"], p["s0sq"], p["d"])


def _projected(law: IsotropicGaussian) -> IsotropicGaussian:
    """Law of ``<x, 1/sqrt(d)>`` under an isotropic Gaussian."""
    return IsotropicGaussian([float(law.mean.sum()) / math.sqrt(law.dim)], law.variance)


def _meanshift_1d(a: float, sigma2: float, d: float) -> IsotropicGaussian:
    # TV, KL, chi^2 and W^2 to N(0, sigma2 I) only see |mean| = |a| sqrt(d)
    return IsotropicGaussian([abs(a) * math.sqrt(d)], sigma2)


def _logcosh_v(x: float) -> float:
    """``x^2/2 + log cosh x`` without overflow."""
    ax = abs(x)
    return 0.5 * x * x + ax + math.log1p(math.exp(-2 * ax)) - math.log(2)


@lru_cache(maxsize=4)
def _logcosh_marginal(lo: float = -14.0, hi: float = 14.0, n: int = 2800) -> GridMeasure1D:
    """Coordinate marginal of ``exp(-x^2/2 - log cosh x)`` with cell masses by quadrature."""
    def dens(x):
        return math.exp(-_logcosh_v(x))

    edges = np.linspace(lo, hi, n + 1)
    masses = [quad(dens, a, b, epsabs=0, epsrel=1e-12)[0] for a, b in zip(edges[:-1], edges[1:])]
    return GridMeasure1D.from_masses(lo, hi, np.asarray(masses))


def _logcosh_cdf(x):
    g = _logcosh_marginal()
    cum = np.concatenate([[0.0], np.cumsum(g.weights)])
    return np.interp(x, g.edges, np.minimum(cum, 1.0), left=0.0, right=1.0)


def _logcosh_kl0(m0: float, s0sq: float, d: int) -> float:
    """``KL(N(m0, s0sq)^d || pi^d)`` for the log-cosh target, by quadrature."""
    if s0sq == 0:
        return math.inf
    z = quad(lambda x: math.exp(-_logcosh_v(x)), -40.0, 40.0, epsabs=0, epsrel=1e-13,
             limit=200)[0]
    log_z = math.log(z)
    s = math.sqrt(s0sq)

    def integrand(x):
        lp = -0.5 * ((x - m0) / s) ** 2 - math.log(s * math.sqrt(2 * math.pi))
        lq = -_logcosh_v(x) - log_z
        return math.exp(lp) * (lp - lq)

    kl = quad(integrand, m0 - 12 * s, m0 + 12 * s, epsabs=1e-13, limit=200)[0]
    return d * kl


def _logcosh_cp() -> float:
    return poincare_grid_1d(_logcosh_marginal()).value


def _auto_steps(sc: Scenario) -> int:
    p = sc.params
    eps_min = min(sc.thresholds)
    init = initial_law(p)
    if sc.family == "prox-general":
        hat = HatCp.of(_logcosh_cp(), p["h"]).value
        kl0 = _logcosh_kl0(p["m0"], p["s0sq"], p["d"])
        w2 = p["d"] * (p["m0"] ** 2 + p["s0sq"]) + p["d"]  # crude upper estimate
    else:
        target = IsotropicGaussian.standard(p["d"], p["sigma2"])
        hat = HatCp.of(p["sigma2"], p["h"]).value
        kl0 = gaussian_kl(init, target)
        w2 = gaussian_w2(init, target)
    bounds = [math.ceil(w2 / (2 * p["h"] * eps_min ** 2))]
    if math.isfinite(kl0):
        bounds.append(math.ceil(hat * (1 + kl0) / eps_min))
    return 3 * min(bounds)


def resolve_steps(sc: Scenario) -> int:
    k = sc.params["k_steps"]
    return _auto_steps(sc) if k == _AUTO else int(k)


# --------------------------------------------------------------------------- #
# profiles


def exact_profile(sc: Scenario, k_steps: Optional[int] = None) -> Optional[MixingProfile]:
    """Exact TV profile of the scenario along the ``1/sqrt(d)`` projection.

    For ``d = 1`` or the Gaussian mean-shift setting this is the full TV; returns
    ``None`` when no oracle exists (non-Gaussian targets).
    """
    p = sc.params
    if sc.family == "ou-mean-shift":
        pr = _horizon_grid(sc)
        return profile_closed_form_meanshift(p["a"], p["sigma2"], p["d"], pr)
    if sc.family == "ou-general-gaussian":
        return profile_ou_gaussian(_projected(initial_law(p)), p["sigma2"], _horizon_grid(sc))
    if sc.family == "prox-general":
        return None
    k_steps = resolve_steps(sc) if k_steps is None else k_steps
    step = prox_gaussian_recursion if sc.family == "prox-gaussian" else lmc_gaussian_recursion
    law = _projected(initial_law(p))
    target = IsotropicGaussian.standard(1, p["sigma2"])
    tv = [gaussian_tv(law, target)]
    for _ in range(k_steps):
        law = step(law, p["sigma2"], p["h"], 1)
        tv.append(gaussian_tv(law, target))
    tv = np.array(tv)
    return MixingProfile(np.arange(k_steps + 1), tv, np.zeros_like(tv), "recursion", discrete=True)


def _horizon_grid(sc: Scenario) -> Optional[np.ndarray]:
    p = sc.params
    if p["horizon"] == _AUTO:
        if sc.family == "ou-mean-shift":
            horizon = 3 * p["sigma2"] * (1 + meanshift_kl0(p["a"], p["sigma2"], p["d"])) / min(
                sc.thresholds)
        else:
            init = _projected(initial_law(p))
            target = IsotropicGaussian.standard(1, p["sigma2"])
            kl0 = gaussian_kl(init, target)
            bounds = [gaussian_w2(init, target) / (8 * min(sc.thresholds) ** 2)]
            if math.isfinite(kl0):
                bounds.append(p["sigma2"] * (1 + kl0) / min(sc.thresholds))
            horizon = 3 * min(bounds)
    else:
        horizon = float(p["horizon"])
    if horizon <= 0:
        return np.zeros(1)
    return geometric_time_grid(horizon, n=p["grid"], t_min=min(1e-3 * p["sigma2"], horizon / 10))


class SimulationResult(NamedTuple):
    profile: MixingProfile
    exact: Optional[MixingProfile]
    stats: Optional[OracleStats]
    final_points: np.ndarray


def profile_simulation(sc: Scenario, threads: int = 1) -> SimulationResult:
    """Run the scenario's chains and estimate TV to the target after every step.

    TV is a histogram plug-in estimate along ``1/sqrt(d)`` (first coordinate for the
    log-cosh target, whose coordinates are independent), hence biased upward by
    sampling noise and a lower bound on the full TV when ``d > 1``.
    """
    if sc.family not in SIMULATED:
        raise PreconditionError(f"family {sc.family!r} has no simulation path")
    p = sc.params
    k_steps = resolve_steps(sc)
    ens = sample_ensemble(initial_law(p), p["chains"], sc.seed)
    if sc.family == "prox-general":
        u = np.zeros(p["d"])
        u[0] = 1.0
        cdf, support = _logcosh_cdf, (-6.0, 6.0)
    else:
        u = np.full(p["d"], 1.0 / math.sqrt(p["d"]))
        s = math.sqrt(p["sigma2"])
        cdf, support = (lambda x: ndtr(x / s)), (-6 * s, 6 * s)

    tv, se = [], []

    def record(_step, pts):
        est = ensemble_tv_vs_cdf(pts @ u, cdf, p["bins"], support)
        tv.append(est.value)
        se.append(est.stderr)

    record(0, ens.points)
    stats = None
    try:
        if sc.family == "lmc-gaussian":
            final = lmc_run(ens, quadratic(p["sigma2"], p["d"]), p["h"], k_steps, threads=threads,
                            callback=record)
        else:
            if sc.family == "prox-gaussian":
                cfg = ProxSamplerConfig(p["h"], IsotropicGaussian.standard(p["d"], p["sigma2"]),
                                        oracle=p["oracle"])
            else:
                cfg = ProxSamplerConfig(p["h"], logcosh(p["d"]), oracle="rejection")
            stats = OracleStats()
            final = prox_sampler_run(ens, cfg, k_steps, threads=threads, stats=stats,
                                     callback=record)
    except Exception as exc:
        exc.args = (f"scenario {sc.name!r} ({sc.family}): {exc.args[0] if exc.args else exc}",
                    *exc.args[1:])
        raise
    prof = MixingProfile(np.arange(k_steps + 1), np.array(tv), np.array(se), "simulation",
                         discrete=True, caveat=f"histogram plug-in, {p['bins']} bins, biased upward")
    exact = exact_profile(sc, k_steps)
    return SimulationResult(prof, exact, stats, final.points)


# --------------------------------------------------------------------------- #
# cutoff sweeps


class SweepRow(NamedTuple):
    d: float
    tmix_eps: float
    tmix_1meps: float
    ratio: float
    window: float
    window_bound: float
    product_ratio: float


def cutoff_sweep(a: float, sigma2: float, d_list: Sequence[float], eps: float,
                 h: Optional[float] = None) -> tuple[list[SweepRow], list[InequalityReport]]:
    """Mixing times, cutoff ratio and window bound across dimensions on the mean-shift family.

    ``h=None`` uses the Langevin diffusion; otherwise the Proximal Sampler with step ``h``
    (times in steps).  Returns the table and the inequality reports it rests on.
    """
    if not d_list:
        raise PreconditionError("d_list must be nonempty")
    if not 0 < eps < 0.5:
        raise PreconditionError("sweeps need 0 < eps < 1/2")
    rows, reports = [], []
    for d in d_list:
        kl0 = meanshift_kl0(a, sigma2, d)
        w2_0 = a * a * d
        if h is None:
            prof = profile_closed_form_meanshift(a, sigma2, d, eps_min=eps)
            win = check_window_bound_ld(prof, sigma2, sigma2, eps)
            mix = check_mixing_bound_ld(prof, sigma2, kl0, eps, w2_0=w2_0)
            prod = product_condition(win.context["tmix_eps"], sigma2, sigma2)
        else:
            prof = profile_prox_meanshift(a, sigma2, h, d, eps_min=eps)
            hat = HatCp.of(sigma2, h)
            win = check_window_bound_prox(prof, hat, hat, eps)
            mix = check_mixing_bound_prox(prof, hat, kl0, eps, w2_0=w2_0, h=h)
            prod = product_condition(win.context["tmix_eps"], sigma2, sigma2, discrete=True, h=h)
        t_eps, t_late = win.context["tmix_eps"], win.context["tmix_1meps"]
        ratio = cutoff_ratio(prof, eps) if t_eps > 0 else math.nan
        rows.append(SweepRow(float(d), float(t_eps), float(t_late), float(ratio), float(win.lhs),
                             win.rhs, float(prod)))
        reports += [_with_context(mix, d=float(d)), _with_context(win, d=float(d))]
    return rows, reports


def _with_context(rep: InequalityReport, **extra) -> InequalityReport:
    return replace(rep, context={**rep.context, **extra})


# --------------------------------------------------------------------------- #
# per-family inequality reports


def _profile_reports(sc: Scenario, prof: MixingProfile) -> list[InequalityReport]:
    p = sc.params
    out: list[InequalityReport] = []
    if sc.family == "ou-mean-shift":
        init = _meanshift_1d(p["a"], p["sigma2"], p["d"])
    else:
        init = _projected(initial_law(p))
    s2 = p["sigma2"]
    target = IsotropicGaussian.standard(1, s2)
    kl0 = gaussian_kl(init, target)
    w2_0 = gaussian_w2(init, target)
    times = [t for t in prof.times if t > 0]
    step = max(1, len(times) // 25)
    if prof.discrete:
        hat_pi, hat_0 = HatCp.of(s2, p["h"]), HatCp.of(init.variance, p["h"])
        ks = [int(k) for k in times[::step]]
        if ks and sc.family == "prox-gaussian":
            out += check_parabolic_reg_prox(init, s2, p["h"], ks)
            out += check_lpi_prox(init, s2, p["h"], [0] + ks)
        for e in sc.thresholds:
            if math.isfinite(kl0):
                out.append(check_mixing_bound_prox(prof, hat_pi, kl0, e, w2_0=w2_0, h=p["h"]))
        for e in sc.window_eps:
            out.append(check_window_bound_prox(prof, hat_pi, hat_0, e))
    else:
        ts = [float(t) for t in times[::step]]
        out += check_parabolic_reg_ld(init, s2, ts)
        out += check_lpi_langevin(init, s2, [0.0] + ts)
        for e in sc.thresholds:
            if math.isfinite(kl0):
                out.append(check_mixing_bound_ld(prof, s2, kl0, e, w2_0=w2_0))
        for e in sc.window_eps:
            out.append(check_window_bound_ld(prof, s2, init.variance, e))
    return out


def _agreement_report(sim: MixingProfile, exact: MixingProfile) -> InequalityReport:
    """Largest excess of ``|tv_sim - tv_exact|`` over ``3 stderr``; must be <= 0."""
    excess = np.abs(sim.tv - exact.tv) - 3.0 * sim.stderr
    i = int(np.argmax(excess))
    return InequalityReport("simulation_agreement", float(excess[i]), 0.0, "histogram",
                            exact.source, {"worst_step": i, "tv_sim": float(sim.tv[i]),
                                           "tv_exact": float(exact.tv[i]),
                                           "stderr": float(sim.stderr[i])}, tol=0.0)


def _lmc_variance_report(sc: Scenario, points: np.ndarray) -> InequalityReport:
    """Final per-coordinate variance against the exact LMC recursion, within 3 stderr.

    At fixed ``h`` the recursion converges to ``2h / (1 - (1 - h/sigma2)^2) != sigma2``:
    the bias floor of the unadjusted scheme.
    """
    p = sc.params
    law = lmc_gaussian_recursion(initial_law(p), p["sigma2"], p["h"], resolve_steps(sc))
    mom = ensemble_moments(ParticleEnsemble(points, EnsembleMeta(sc.seed, points.shape[0])))
    stationary = 2 * p["h"] / (1 - (1 - p["h"] / p["sigma2"]) ** 2)
    return InequalityReport("lmc_variance_agreement", abs(mom.cov_trace_over_d - law.variance),
                            3 * mom.stderr_var, "monte-carlo", "closed-form",
                            {"variance": mom.cov_trace_over_d, "exact": law.variance,
                             "stationary": stationary, "sigma2": p["sigma2"]}, tol=0.0)


def _general_reports(sc: Scenario, sim: MixingProfile) -> list[InequalityReport]:
    """Mixing and window bounds for the log-cosh target, measured on the simulated profile.

    The measured side uses the lower envelope ``tv - 3 stderr`` so sampling noise cannot
    produce a spurious violation; ``C_P(pi)`` comes from the grid eigensolver.
    """
    p = sc.params
    lower = np.clip(sim.tv - 3.0 * sim.stderr, 0.0, 1.0)
    env = MixingProfile(sim.times, lower, sim.stderr, "simulation", discrete=True)
    cp = _logcosh_cp()
    hat_pi, hat_0 = HatCp.of(cp, p["h"]), HatCp.of(p["s0sq"], p["h"])
    kl0 = _logcosh_kl0(p["m0"], p["s0sq"], p["d"])
    out = []
    for e in sc.thresholds:
        if math.isfinite(kl0):
            rep = check_mixing_bound_prox(env, hat_pi, kl0, e)
            out.append(_with_context(rep, cp_pi_method="grid-eigensolve",
                                     tmix_raw=measure_tmix(sim, e)))
    for e in sc.window_eps:
        out.append(check_window_bound_prox(env, hat_pi, hat_0, e))
    return out


# --------------------------------------------------------------------------- #
# artifacts


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return str(o)


REPORT_COLUMNS = ("name", "lhs", "rhs", "slack", "holds", "vacuous", "lhs_method", "rhs_method",
                  "context")


def report_rows(reports: Sequence[InequalityReport]):
    for r in reports:
        yield (r.name, r.lhs, r.rhs, r.slack, r.holds, r.vacuous, r.lhs_method, r.rhs_method,
               json.dumps(r.context, sort_keys=True, default=_json_default))


def write_reports(path: Path, reports: Sequence[InequalityReport]) -> None:
    _write_csv(path, REPORT_COLUMNS, report_rows(reports))


def _svg(path: Path, draw: Callable) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "cutofflab", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        draw(ax)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


@dataclass
class RunManifest:
    out_dir: Path
    artifacts: list
    reports: list
    seed: int
    digest: str
    acceptance_rate: Optional[float] = None
    table: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [r for r in self.reports if not r.holds]

    @property
    def ok(self) -> bool:
        return not self.violations


def _versions() -> dict:
    import matplotlib
    import scipy
    return {"cutofflab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "matplotlib": matplotlib.__version__}


def run_scenario(sc: Scenario, out_dir, threads: int = 1) -> RunManifest:
    """Compute the scenario, write its CSVs, SVG and manifest under ``out_dir``.

    Artifacts: a profile (or sweep) CSV, ``inequalities.csv`` and one SVG plot.  CSV
    bytes depend only on the scenario, never on ``threads``.
    """
    out = Path(out_dir)
    p = sc.params
    acceptance = None
    table: list = []

    if sc.family == "ou-mean-shift" and sc.d_list:
        eps = sc.window_eps[0] if sc.window_eps else 0.25
        h = p["h"] if p["h"] > 0 else None
        rows, reports = cutoff_sweep(p["a"], p["sigma2"], sc.d_list, eps, h=h)
        table = rows
        main_name, plot_name = "sweep.csv", "ratio_vs_d.svg"

        def main_writer(path):
            _write_csv(path, SweepRow._fields, rows)

        def draw(ax):
            ax.semilogx([r.d for r in rows], [r.ratio for r in rows], "o-")
            ax.axhline(1.0, color="grey", lw=0.8, ls="--")
            ax.set_xlabel("dimension d")
            ax.set_ylabel(f"t_mix({1 - eps:g}) / t_mix({eps:g})")
    elif sc.family in SIMULATED:
        res = profile_simulation(sc, threads=threads)
        prof, exact = res.profile, res.exact
        if sc.family == "prox-general" or p.get("oracle") == "rejection":
            acceptance = res.stats.acceptance_rate
        if sc.family == "lmc-gaussian":
            reports = [_agreement_report(prof, exact), _lmc_variance_report(sc, res.final_points)]
        elif exact is not None:
            reports = _profile_reports(sc, exact) + [_agreement_report(prof, exact)]
        else:
            reports = _general_reports(sc, prof)
        table = [(measure_tmix(prof, e) if np.any(prof.tv <= e) else math.nan) for e in sc.thresholds]
        main_name, plot_name = "profile.csv", "tv_profile.svg"

        def main_writer(path):
            ex = exact.tv if exact is not None else np.full(prof.tv.size, math.nan)
            _write_csv(path, ("step", "tv", "stderr", "tv_exact"),
                       zip(prof.times, prof.tv, prof.stderr, ex))

        def draw(ax):
            ax.errorbar(prof.times, prof.tv, yerr=3 * prof.stderr, fmt=".", ms=3,
                        label="simulation (3 stderr)")
            if exact is not None:
                ax.plot(exact.times, exact.tv, "-", label="exact")
            for e in sc.thresholds:
                ax.axhline(e, color="grey", lw=0.6, ls=":")
            ax.set_xlabel("step k")
            ax.set_ylabel("TV to target")
            ax.legend()
    else:
        prof = exact_profile(sc)
        reports = _profile_reports(sc, prof)
        table = [measure_tmix(prof, e) for e in sc.thresholds]
        main_name, plot_name = "profile.csv", "tv_profile.svg"

        def main_writer(path):
            _write_csv(path, ("time", "tv", "stderr"), zip(prof.times, prof.tv, prof.stderr))

        def draw(ax):
            ax.semilogx(prof.times[1:], prof.tv[1:], "-")
            for e in sc.thresholds:
                ax.axhline(e, color="grey", lw=0.6, ls=":")
            ax.set_xlabel("time t")
            ax.set_ylabel("TV to target")

    out.mkdir(parents=True, exist_ok=True)
    main_writer(out / main_name)
    write_reports(out / "inequalities.csv", reports)
    _svg(out / plot_name, draw)
    artifacts = [main_name, "inequalities.csv", plot_name]
    man = RunManifest(out, artifacts, reports, sc.seed, sc.digest(), acceptance, table)
    lines = [f"name = {sc.name}", f"family = {sc.family}", f"seed = {sc.seed}",
             f"config_sha256 = {man.digest}",
             f"eps = {', '.join(repr(e) for e in sc.eps)}"]
    lines += [f"param.{k} = {_fmt(v)}" for k, v in sorted(p.items())]
    lines += [f"version.{k} = {v}" for k, v in _versions().items()]
    if acceptance is not None:
        lines.append(f"acceptance_rate = {acceptance!r}")
    lines.append(f"reports = {len(reports)}")
    lines.append(f"violations = {len(man.violations)}")
    lines.append(f"artifacts = {', '.join(artifacts)}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for r in man.violations:
        log.error("violated: %s lhs=%r rhs=%r context=%s", r.name, r.lhs, r.rhs, r.context)
    return man
