"""TV-to-equilibrium profiles and mixing times read off them."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, ndtri

from .exceptions import HorizonError, PreconditionError
from .measures import IsotropicGaussian, gaussian_kl, gaussian_tv
from .samplers import ou_flow, prox_gaussian_recursion

__all__ = [
    "MixingProfile",
    "geometric_time_grid",
    "measure_tmix",
    "meanshift_kl0",
    "meanshift_tmix",
    "profile_closed_form_meanshift",
    "profile_ou_gaussian",
    "profile_prox_meanshift",
    "profile_prox_recursion",
]

log = logging.getLogger(__name__)

SOURCES = ("closed-form", "recursion", "simulation")


@dataclass(frozen=True, eq=False)
class MixingProfile:
    """Sampled map ``t -> TV(mu_t, pi)``.

    ``tv_fn``, when present, evaluates the exact profile at any time and is used to
    refine threshold crossings beyond the grid resolution.
    """

    times: np.ndarray
    tv: np.ndarray
    stderr: np.ndarray
    source: str
    discrete: bool = False
    tv_fn: Optional[Callable[[float], float]] = field(default=None, repr=False)
    caveat: Optional[str] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int64 if self.discrete else float)
        tv = np.asarray(self.tv, dtype=float)
        se = np.asarray(self.stderr, dtype=float)
        if not (t.shape == tv.shape == se.shape) or t.ndim != 1 or t.size == 0:
            raise ValueError("times, tv and stderr must be nonempty 1-D arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(tv < 0) or np.any(tv > 1) or np.any(se < 0):
            raise ValueError("tv must lie in [0, 1] and stderr be nonnegative")
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        for name, arr in (("times", t), ("tv", tv), ("stderr", se)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def geometric_time_grid(horizon: float, n: int = 400, t_min: Optional[float] = None) -> np.ndarray:
    """``0`` followed by ``n`` geometrically spaced times up to ``horizon``."""
    if horizon <= 0:
        return np.zeros(1)
    t_min = t_min if t_min is not None else min(1e-3, horizon / 10)
    return np.concatenate([[0.0], np.geomspace(t_min, horizon, n)])


def _first_crossing(profile: MixingProfile, eps: float) -> int:
    below = np.flatnonzero(profile.tv <= eps)
    if below.size == 0:
        raise HorizonError(
            f"profile never reaches TV <= {eps} within horizon {profile.times[-1]}; extend it")
    i = int(below[0])
    if np.any(profile.tv[i:] > eps):
        log.warning("TV re-crosses %g after its first crossing at t=%s (source=%s)",
                    eps, profile.times[i], profile.source)
    return i


def measure_tmix(profile: MixingProfile, eps: float) -> float:
    """First time the profile is at or below ``eps``.

    Discrete profiles return the step index.  Profiles carrying ``tv_fn`` are
    refined by root bracketing inside the crossing grid cell.
    """
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    i = _first_crossing(profile, eps)
    if profile.discrete:
        return int(profile.times[i])
    if i == 0 or profile.tv_fn is None:
        return float(profile.times[i])
    a, b = float(profile.times[i - 1]), float(profile.times[i])
    fn = profile.tv_fn
    if fn(b) - eps > 0:
        return b
    return float(brentq(lambda t: fn(t) - eps, a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps,
                        maxiter=500))


def _meanshift_tv(a: float, sigma2: float, d: float, t) -> np.ndarray:
    shift = abs(a) * math.sqrt(d) * np.exp(-np.asarray(t, dtype=float) / sigma2)
    return erf(shift / (2.0 * math.sqrt(sigma2) * math.sqrt(2.0)))


def meanshift_kl0(a: float, sigma2: float, d: float) -> float:
    return a * a * d / (2.0 * sigma2)


def meanshift_tmix(a: float, sigma2: float, d: float, eps: float) -> float:
    """Analytic mixing time ``sigma2 log(|a| sqrt(d) / (2 sigma z_eps))`` of the mean-shift family."""
    z = float(ndtri((1.0 + eps) / 2.0))
    return max(0.0, sigma2 * math.log(abs(a) * math.sqrt(d) / (2.0 * math.sqrt(sigma2) * z)))


def profile_closed_form_meanshift(a: float, sigma2: float, d: int,
                                  t_grid: Optional[Sequence[float]] = None, *,
                                  eps_min: float = 0.05) -> MixingProfile:
    """Exact TV profile of the Langevin diffusion on N(0, sigma2 I) from N(a 1, sigma2 I).

    Without ``t_grid`` the horizon is three times the basic mixing-time bound
    ``sigma2 (1 + KL) / eps_min``.
    """
    if a == 0 or d < 1:
        raise PreconditionError("need a != 0 and d >= 1")
    if t_grid is None:
        t_grid = geometric_time_grid(3.0 * sigma2 * (1.0 + meanshift_kl0(a, sigma2, d)) / eps_min,
                                     t_min=1e-3 * sigma2)
    t = np.asarray(t_grid, dtype=float)
    tv = _meanshift_tv(a, sigma2, d, t)
    return MixingProfile(t, tv, np.zeros_like(tv), "closed-form",
                         tv_fn=lambda s: float(_meanshift_tv(a, sigma2, d, s)))


def profile_ou_gaussian(init: IsotropicGaussian, sigma2: float,
                        t_grid: Optional[Sequence[float]] = None, *,
                        eps_min: float = 0.05) -> MixingProfile:
    """TV profile of the Langevin diffusion on N(0, sigma2 I) from any isotropic Gaussian."""
    target = IsotropicGaussian.standard(init.dim, sigma2)

    def tv_at(s: float) -> float:
        return gaussian_tv(ou_flow(init, sigma2, float(s)), target)

    if t_grid is None:
        kl0 = gaussian_kl(ou_flow(init, sigma2, 1e-3 * sigma2), target)
        t_grid = geometric_time_grid(3.0 * sigma2 * (1.0 + kl0) / eps_min, n=200,
                                     t_min=1e-3 * sigma2)
    t = np.asarray(t_grid, dtype=float)
    tv = np.array([tv_at(s) for s in t])
    return MixingProfile(t, tv, np.zeros_like(tv), "closed-form", tv_fn=tv_at)


def profile_prox_recursion(init: IsotropicGaussian, sigma2: float, h: float,
                           k_max: int) -> MixingProfile:
    """Exact TV profile of the Proximal Sampler on N(0, sigma2 I), steps ``0..k_max``."""
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    target = IsotropicGaussian.standard(init.dim, sigma2)
    law = init
    tv = [gaussian_tv(law, target)]
    for _ in range(k_max):
        law = prox_gaussian_recursion(law, sigma2, h, 1)
        tv.append(gaussian_tv(law, target))
    tv = np.array(tv)
    return MixingProfile(np.arange(k_max + 1), tv, np.zeros_like(tv), "recursion", discrete=True)


def profile_prox_meanshift(a: float, sigma2: float, h: float, d: float,
                           k_max: Optional[int] = None, *, eps_min: float = 0.05) -> MixingProfile:
    """Exact TV profile of the Proximal Sampler from N(a 1, sigma2 I), steps ``0..k_max``.

    The variance stays at its stationary value, so only the mean contracts by
    ``sigma2 / (sigma2 + h)`` per step; ``d`` may be astronomically large.
    """
    if a == 0 or d < 1 or not h > 0:
        raise PreconditionError("need a != 0, d >= 1 and h > 0")
    if k_max is None:
        hat = 1.0 + sigma2 / h
        bound = 3 * math.ceil(hat * (1.0 + meanshift_kl0(a, sigma2, d)) / eps_min)
        # the basic bound grows like d while the true mixing time grows like log d
        z = float(ndtri((1.0 + eps_min / 2) / 2.0))
        need = math.log(abs(a) * math.sqrt(d) / (2.0 * math.sqrt(sigma2) * z)) / math.log1p(h / sigma2)
        k_max = int(min(bound, 2 * max(0, math.ceil(need)) + 10))
    k = np.arange(int(k_max) + 1)
    shift = abs(a) * math.sqrt(d) * np.exp(k * math.log(sigma2 / (sigma2 + h)))
    tv = erf(shift / (2.0 * math.sqrt(sigma2) * math.sqrt(2.0)))
    return MixingProfile(k, tv, np.zeros_like(tv), "recursion", discrete=True)
