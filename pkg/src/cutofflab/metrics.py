"""Estimators tying particle ensembles and densities to divergence values."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import ndtr

from .exceptions import NonFiniteError, PreconditionError
from .measures import IsotropicGaussian
from .rng import RngStream
from .samplers import ParticleEnsemble

__all__ = [
    "DivergenceEstimate",
    "EnergyTest",
    "EnsembleMoments",
    "energy_distance_test",
    "ensemble_moments",
    "ensemble_tv_vs_cdf",
    "ensemble_tv_vs_gaussian",
    "tv_mc_exact_density",
]

_EXACT_METHODS = ("closed-form", "quadrature", "grid")
METHODS = _EXACT_METHODS + ("mc-exact-density", "histogram")


@dataclass(frozen=True)
class DivergenceEstimate:
    """A divergence value with its uncertainty and provenance.

    ``raw`` keeps the estimator output before clamping to the codomain;
    ``caveat`` flags known bias (e.g. histogram plug-in estimates).
    """

    value: float
    stderr: float
    n_samples: int
    method: str
    raw: Optional[float] = None
    caveat: Optional[str] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.method in _EXACT_METHODS and self.stderr != 0:
            raise ValueError(f"method {self.method!r} carries no sampling error")
        if self.raw is None:
            object.__setattr__(self, "raw", self.value)


def tv_mc_exact_density(p_density: Callable, q_density: Callable, q_sampler: Callable,
                        n: int, rng: RngStream) -> DivergenceEstimate:
    """Unbiased TV estimate ``E_{x~q} (1 - p(x)/q(x))_+`` from exact densities.

    ``q_sampler(rng, n)`` returns ``n`` draws from ``q``.  A degenerate sample
    (all summands equal) yields stderr 0.
    """
    if n < 1000:
        raise PreconditionError("need n >= 1000 samples")
    x = q_sampler(rng, n)
    p = np.asarray(p_density(x), dtype=float)
    q = np.asarray(q_density(x), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = p / q
    bad = ~np.isfinite(ratio)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise NonFiniteError(f"non-finite density ratio at sample {x[i]!r}", point=x[i])
    terms = np.clip(1.0 - ratio, 0.0, None)
    raw = float(terms.mean())
    se = float(terms.std(ddof=1) / math.sqrt(n))
    return DivergenceEstimate(min(1.0, max(0.0, raw)), se, n, "mc-exact-density", raw=raw)


class EnsembleMoments(NamedTuple):
    mean: np.ndarray
    cov_trace_over_d: float
    stderr_mean: float
    stderr_var: float


def ensemble_moments(e: ParticleEnsemble) -> EnsembleMoments:
    """Sample mean and per-coordinate variance with standard errors.

    The variance error uses the fourth-moment (delta-method) formula applied to the
    per-chain statistic ``mean_j (x_ij - xbar_j)^2``.
    """
    x = e.points
    n = x.shape[0]
    if n < 2:
        raise PreconditionError("need at least two chains")
    mean = x.mean(axis=0)
    z = np.mean((x - mean) ** 2, axis=1)
    var = float(z.sum() / (n - 1))
    se_var = float(z.std(ddof=1) / math.sqrt(n) * n / (n - 1))
    se_mean = math.sqrt(var / n)
    return EnsembleMoments(mean, var, se_mean, se_var)


def ensemble_tv_vs_cdf(samples: np.ndarray, cdf: Callable, bins: int,
                       support: tuple[float, float]) -> DivergenceEstimate:
    """Histogram plug-in TV between 1-D samples and a reference given by its CDF.

    Bins cover ``support`` extended to the sample range; reference mass outside the
    bins is counted in full.  The reported stderr ``0.5 sum_b sqrt(q_b (1 - q_b) / n)``
    is a conservative scale: it dominates both the sampling standard deviation and
    the upward plug-in bias.
    """
    if bins < 10:
        raise PreconditionError("need at least 10 bins")
    s = np.asarray(samples, dtype=float).reshape(-1)
    n = s.size
    lo = min(support[0], float(s.min()))
    hi = max(support[1], float(s.max()))
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(s, bins=edges)
    emp = counts / n
    cdf_e = np.asarray(cdf(edges), dtype=float)
    ref = np.diff(cdf_e)
    outside = float(cdf_e[0] + (1.0 - cdf_e[-1]))
    raw = 0.5 * (float(np.abs(emp - ref).sum()) + outside)
    se = 0.5 * float(np.sum(np.sqrt(ref * (1 - ref) / n)))
    return DivergenceEstimate(min(1.0, max(0.0, raw)), se, n, "histogram", raw=raw,
                              caveat=f"histogram plug-in, {bins} bins: biased upward")


def ensemble_tv_vs_gaussian(e: ParticleEnsemble, ref: IsotropicGaussian, bins: int,
                            direction: Optional[np.ndarray] = None) -> DivergenceEstimate:
    """Histogram TV between the ensemble and ``ref`` along a 1-D projection.

    ``direction`` is required when ``dim > 1``; the TV of projections is a lower
    bound on the full TV.
    """
    if e.dim != ref.dim:
        raise PreconditionError("ensemble and reference dimensions differ")
    if e.dim == 1:
        u = np.ones(1)
    elif direction is None:
        raise PreconditionError("dim > 1 requires a projection direction")
    else:
        u = np.asarray(direction, dtype=float)
        u = u / np.linalg.norm(u)
    proj = e.points @ u
    m, s = float(ref.mean @ u), ref.std
    return ensemble_tv_vs_cdf(proj, lambda x: ndtr((x - m) / s), bins, (m - 6 * s, m + 6 * s))


class EnergyTest(NamedTuple):
    statistic: float
    threshold: float
    p_value: float
    passed: bool


def _energy_stat(D: np.ndarray, idx_x: np.ndarray, idx_y: np.ndarray) -> float:
    return (2.0 * D[np.ix_(idx_x, idx_y)].mean() - D[np.ix_(idx_x, idx_x)].mean()
            - D[np.ix_(idx_y, idx_y)].mean())


def energy_distance_test(x: np.ndarray, y: np.ndarray, n_perm: int = 499, level: float = 0.99,
                         seed: int = 0) -> EnergyTest:
    """Two-sample permutation test on the energy distance.

    ``passed`` means the observed statistic is below the ``level`` quantile of its
    permutation distribution, i.e. no evidence that the samples differ.
    """
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    y = np.asarray(y, dtype=float).reshape(len(y), -1)
    z = np.vstack([x, y])
    D = cdist(z, z)
    nx = x.shape[0]
    idx = np.arange(z.shape[0])
    obs = _energy_stat(D, idx[:nx], idx[nx:])
    gen = np.random.default_rng(seed)
    perm = np.empty(n_perm)
    for i in range(n_perm):
        p = gen.permutation(idx)
        perm[i] = _energy_stat(D, p[:nx], p[nx:])
    thr = float(np.quantile(perm, level))
    pval = float((1 + np.sum(perm >= obs)) / (1 + n_perm))
    return EnergyTest(float(obs), thr, pval, bool(obs <= thr))
