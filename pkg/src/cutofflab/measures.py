"""Analytic and gridded probability laws, their divergences and Poincaré constants.

Infinite divergences are returned as ``math.inf`` from an explicit branch on the
finiteness condition, never produced by floating overflow, so callers can test
them with :func:`math.isinf`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate, linalg
from scipy.special import erf, ndtr

from .exceptions import (
    DimensionMismatchError,
    EigensolverError,
    GridMismatchError,
    PreconditionError,
)

__all__ = [
    "GridDivergences",
    "GridMeasure1D",
    "IsotropicGaussian",
    "PoincareEstimate",
    "gaussian_chi2",
    "gaussian_kl",
    "gaussian_tv",
    "gaussian_w2",
    "grid_divergences",
    "grid_tv",
    "grid_w2",
    "poincare_grid_1d",
    "poincare_of_gaussian",
]

QUAD_ABS_TOL = 1e-10
QUAD_SPAN = 10.0


@dataclass(frozen=True, eq=False)
class IsotropicGaussian:
    """The law N(mean, variance * I_d).  ``variance == 0`` marks a Dirac mass."""

    mean: np.ndarray
    variance: float

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", float(self.variance))
        if mean.size == 0:
            raise ValueError("mean must have at least one coordinate")
        if not self.variance >= 0 or not math.isfinite(self.variance):
            raise ValueError(f"variance must be finite and >= 0, got {self.variance}")

    @classmethod
    def isotropic(cls, mean: float, variance: float, dim: int = 1) -> "IsotropicGaussian":
        return cls(np.full(dim, float(mean)), variance)

    @classmethod
    def standard(cls, dim: int = 1, variance: float = 1.0) -> "IsotropicGaussian":
        return cls(np.zeros(dim), variance)

    @classmethod
    def dirac(cls, point) -> "IsotropicGaussian":
        return cls(np.atleast_1d(point), 0.0)

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def is_dirac(self) -> bool:
        return self.variance == 0.0

    def logpdf(self, x) -> np.ndarray:
        if self.is_dirac:
            raise PreconditionError("a Dirac mass has no Lebesgue density")
        x = np.asarray(x, dtype=float)
        x = x.reshape(-1, self.dim) if x.ndim < 2 else x
        sq = np.sum((x - self.mean) ** 2, axis=-1)
        return -0.5 * sq / self.variance - 0.5 * self.dim * math.log(2 * math.pi * self.variance)

    def pdf(self, x) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def __eq__(self, other):
        if not isinstance(other, IsotropicGaussian):
            return NotImplemented
        return (self.variance == other.variance and self.dim == other.dim
                and bool(np.array_equal(self.mean, other.mean)))

    def __hash__(self):
        return hash((self.variance, self.mean.tobytes()))

    def __repr__(self):
        m = self.mean
        mean = f"{m[0]!r}*1" if np.all(m == m[0]) and m.size > 1 else np.array2string(m)
        return f"IsotropicGaussian(mean={mean}, variance={self.variance!r}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class GridMeasure1D:
    """Piecewise-constant law on ``n`` uniform cells of ``[lo, hi]``, stored as cell masses."""

    lo: float
    hi: float
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if not self.hi > self.lo:
            raise ValueError("need hi > lo")
        if w.size < 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = w.sum()
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {total!r}); use from_masses to normalize")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "lo", float(self.lo))
        object.__setattr__(self, "hi", float(self.hi))

    @classmethod
    def from_masses(cls, lo, hi, masses) -> "GridMeasure1D":
        m = np.asarray(masses, dtype=float)
        return cls(lo, hi, m / m.sum())

    @classmethod
    def from_cdf(cls, cdf: Callable, lo: float, hi: float, n: int) -> "GridMeasure1D":
        edges = np.linspace(lo, hi, n + 1)
        return cls.from_masses(lo, hi, np.diff(cdf(edges)))

    @classmethod
    def from_density(cls, density: Callable, lo: float, hi: float, n: int) -> "GridMeasure1D":
        """Cell masses from the midpoint rule (renormalized)."""
        edges = np.linspace(lo, hi, n + 1)
        mids = 0.5 * (edges[1:] + edges[:-1])
        return cls.from_masses(lo, hi, np.asarray(density(mids), dtype=float))

    @classmethod
    def gaussian(cls, mean: float, variance: float, lo: float, hi: float, n: int) -> "GridMeasure1D":
        z = (np.linspace(lo, hi, n + 1) - mean) / math.sqrt(variance)
        # upper tail from the survival side to avoid 1 - 1 cancellation
        masses = np.where(z[1:] <= 0, ndtr(z[1:]) - ndtr(z[:-1]), ndtr(-z[:-1]) - ndtr(-z[1:]))
        return cls.from_masses(lo, hi, masses)

    @classmethod
    def uniform(cls, a: float, b: float, lo: float, hi: float, n: int) -> "GridMeasure1D":
        """Uniform law on ``[a, b]`` assigned by exact cell overlap."""
        edges = np.linspace(lo, hi, n + 1)
        overlap = np.clip(np.minimum(edges[1:], b) - np.maximum(edges[:-1], a), 0.0, None)
        return cls.from_masses(lo, hi, overlap)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def dx(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[1:] + e[:-1])

    def same_grid(self, other: "GridMeasure1D") -> bool:
        return (self.lo, self.hi, self.n) == (other.lo, other.hi, other.n)

    def mean(self) -> float:
        return float(self.weights @ self.centers)

    def variance(self) -> float:
        # piecewise-constant law: between-cell variance plus dx^2/12 inside each cell
        c = self.centers
        mu = self.weights @ c
        return float(self.weights @ (c - mu) ** 2 + self.dx**2 / 12)


@dataclass(frozen=True)
class PoincareEstimate:
    value: float
    method: str
    residual: float = 0.0

    METHODS = ("analytic-gaussian", "grid-eigensolve", "dirac")

    def __post_init__(self):
        if self.method not in self.METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not self.value >= 0:
            raise ValueError("Poincaré constant must be >= 0")
        if self.method == "dirac" and self.value != 0:
            raise ValueError("dirac estimate must have value 0")

    def __float__(self):
        return float(self.value)


def poincare_of_gaussian(g: IsotropicGaussian) -> PoincareEstimate:
    """Poincaré constant of N(m, s^2 I), which is s^2."""
    if g.is_dirac:
        return PoincareEstimate(0.0, "dirac")
    return PoincareEstimate(g.variance, "analytic-gaussian")


def poincare_grid_1d(m: GridMeasure1D) -> PoincareEstimate:
    """Poincaré constant of a piecewise-constant density by a weighted Neumann eigensolve.

    The Dirichlet form ``int rho f'^2`` is discretized with harmonic-mean edge
    densities; the constant is ``1 / lambda_1`` where ``lambda_1`` is the smallest
    nonzero eigenvalue of ``L f = lambda M f`` with ``M = diag(cell masses)``.
    A support split by an empty cell has constant ``inf``.
    """
    pos = np.flatnonzero(m.weights > 0)
    if pos.size == 0:
        raise ValueError("empty measure")
    if pos.size == 1:
        return PoincareEstimate(0.0, "dirac")
    p = m.weights[pos[0]:pos[-1] + 1]
    if np.any(p == 0):
        return PoincareEstimate(math.inf, "grid-eigensolve")
    dx = m.dx
    rho = p / dx
    c = (2 * rho[:-1] * rho[1:] / (rho[:-1] + rho[1:])) / dx
    diag = np.zeros_like(p)
    diag[:-1] += c
    diag[1:] += c
    diag /= p
    off = -c / np.sqrt(p[:-1] * p[1:])
    try:
        evals, evecs = linalg.eigh_tridiagonal(diag, off, select="i", select_range=(0, 1))
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigensolverError(f"tridiagonal eigensolve failed: {exc}") from exc
    lam, v = evals[1], evecs[:, 1]
    Av = diag * v
    Av[:-1] += off * v[1:]
    Av[1:] += off * v[:-1]
    residual = float(np.linalg.norm(Av - lam * v))
    if not lam > 0:
        raise EigensolverError(f"non-positive spectral gap {lam!r}")
    return PoincareEstimate(float(1.0 / lam), "grid-eigensolve", residual)


def _check_dims(a: IsotropicGaussian, b: IsotropicGaussian):
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


def gaussian_w2(a: IsotropicGaussian, b: IsotropicGaussian) -> float:
    """Squared 2-Wasserstein distance ``|m_a - m_b|^2 + d (s_a - s_b)^2``."""
    _check_dims(a, b)
    return float(np.sum((a.mean - b.mean) ** 2) + a.dim * (a.std - b.std) ** 2)


def gaussian_kl(p: IsotropicGaussian, q: IsotropicGaussian) -> float:
    """Relative entropy D(p || q)."""
    _check_dims(p, q)
    if p == q:
        return 0.0
    if p.is_dirac or q.is_dirac:
        return math.inf
    d = p.dim
    r = p.variance / q.variance
    shift = float(np.sum((p.mean - q.mean) ** 2)) / q.variance
    # r - 1 - log r, written to stay accurate as r -> 1
    return 0.5 * (d * ((r - 1.0) - math.log1p(r - 1.0)) + shift)


def gaussian_chi2(nu: IsotropicGaussian, mu: IsotropicGaussian) -> float:
    """Chi-squared divergence of ``nu`` w.r.t. ``mu``; ``inf`` unless var(nu) < 2 var(mu)."""
    _check_dims(nu, mu)
    if nu == mu:
        return 0.0
    if mu.is_dirac:
        raise PreconditionError("chi-squared w.r.t. a Dirac mass is undefined here")
    if nu.is_dirac or nu.variance >= 2.0 * mu.variance:
        return math.inf
    s1, s2 = nu.variance, mu.variance
    denom = 2.0 * s2 - s1
    log_pref = nu.dim * (math.log(s2) - 0.5 * math.log(s1) - 0.5 * math.log(denom))
    expo = float(np.sum((nu.mean - mu.mean) ** 2)) / denom
    if log_pref + expo > 709.0:
        return math.inf  # beyond the float range
    return math.expm1(log_pref + expo)


def _interval_mass(lo: float, hi: float) -> float:
    """``Phi(hi) - Phi(lo)`` evaluated on the tail side that avoids cancellation."""
    if hi <= 0:
        return float(ndtr(hi) - ndtr(lo))
    if lo >= 0:
        return float(ndtr(-lo) - ndtr(-hi))
    return float(1.0 - ndtr(lo) - ndtr(-hi))


def _tv_sliced(a: IsotropicGaussian, b: IsotropicGaussian) -> float:
    """Exact TV for unequal variances in ``d >= 2`` by slicing along the mean difference.

    With ``x1`` the coordinate along ``m_b - m_a`` and ``u`` the squared norm of the
    orthogonal part, ``{p_a > p_b}`` is an interval in ``x1`` for each ``u``.  Its
    Gaussian mass is integrated against the chi law of ``sqrt(u)``.  Unlike the
    ball/noncentral chi^2 form this stays accurate when the variances nearly agree.
    """
    if a.variance > b.variance:
        a, b = b, a
    sa, sb, d = a.variance, b.variance, a.dim
    delta = float(np.linalg.norm(b.mean - a.mean))
    A = 1.0 / sa - 1.0 / sb
    b1 = delta / sb
    K = delta * delta / sb - d * math.log(sa / sb)
    k = d - 1
    log_norm = (1 - k / 2) * math.log(2.0) - math.lgamma(k / 2)

    def masses(t: float) -> tuple[float, float]:
        # interval {x1 : A x1^2 + 2 b1 x1 < K - A u}, u = t^2 in units where needed
        def section(scale_var: float) -> tuple[float, float]:
            u = scale_var * t * t
            disc = b1 * b1 + A * (K - A * u)
            if disc <= 0:
                return 0.0, 0.0
            root = math.sqrt(disc)
            r1 = -(b1 + root) / A
            r2 = (K - A * u) / (b1 + root)
            return r1, r2

        r1, r2 = section(sa)
        pa = _interval_mass(r1 / math.sqrt(sa), r2 / math.sqrt(sa)) if r2 > r1 else 0.0
        r1, r2 = section(sb)
        pb = (_interval_mass((r1 - delta) / math.sqrt(sb), (r2 - delta) / math.sqrt(sb))
              if r2 > r1 else 0.0)
        return pa, pb

    def chi_pdf(t: float) -> float:
        if t <= 0:
            return math.exp(log_norm) if k == 1 else 0.0
        return math.exp(log_norm + (k - 1) * math.log(t) - 0.5 * t * t)

    t_hi = math.sqrt(k) + 40.0
    # slices vanish once A^2 u exceeds b1^2 + A K
    kinks = []
    u_max = (b1 * b1 + A * K) / (A * A)
    for s2 in (sa, sb):
        tk = math.sqrt(u_max / s2)
        if tk < t_hi:
            kinks.append(tk)
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400, points=sorted(kinks) or None)
    ea = integrate.quad(lambda t: chi_pdf(t) * masses(t)[0], 0.0, t_hi, **opts)[0]
    eb = integrate.quad(lambda t: chi_pdf(t) * masses(t)[1], 0.0, t_hi, **opts)[0]
    return min(1.0, max(0.0, ea - eb))


def _tv_quad_1d(a: IsotropicGaussian, b: IsotropicGaussian) -> float:
    ma, mb = float(a.mean[0]), float(b.mean[0])
    sa, sb = a.std, b.std
    lo = min(ma - QUAD_SPAN * sa, mb - QUAD_SPAN * sb)
    hi = max(ma + QUAD_SPAN * sa, mb + QUAD_SPAN * sb)
    # |p - q| has kinks where the densities cross; hand them to the integrator
    qa, qb = 1 / sa**2 - 1 / sb**2, ma / sa**2 - mb / sb**2
    qc = ma**2 / sa**2 - mb**2 / sb**2 + 2 * math.log(sa / sb)
    roots = np.roots([qa, -2 * qb, qc])
    points = sorted(float(r.real) for r in roots if abs(r.imag) < 1e-12 and lo < r.real < hi)

    def integrand(x):
        za, zb = (x - ma) / sa, (x - mb) / sb
        return abs(math.exp(-0.5 * za * za) / sa - math.exp(-0.5 * zb * zb) / sb) / math.sqrt(2 * math.pi)

    val, _ = integrate.quad(integrand, lo, hi, points=points or None, epsabs=QUAD_ABS_TOL,
                            epsrel=1e-12, limit=400)
    return min(1.0, max(0.0, 0.5 * val))


def gaussian_tv(a: IsotropicGaussian, b: IsotropicGaussian) -> float:
    """Total-variation distance between isotropic Gaussians.

    Equal variances use ``2 Phi(|m_a - m_b| / 2s) - 1``; unequal variances use
    adaptive quadrature in one dimension and a sliced one-dimensional integral otherwise.
    """
    _check_dims(a, b)
    if a == b:
        return 0.0
    if a.is_dirac or b.is_dirac:
        return 1.0
    if a.variance == b.variance:
        dist = float(np.linalg.norm(a.mean - b.mean))
        return float(erf(dist / (2.0 * a.std * math.sqrt(2.0))))
    if a.dim == 1:
        return _tv_quad_1d(a, b)
    return _tv_sliced(a, b)


def grid_tv(a: GridMeasure1D, b: GridMeasure1D) -> float:
    _require_same_grid(a, b)
    return float(0.5 * np.abs(a.weights - b.weights).sum())


def _require_same_grid(a: GridMeasure1D, b: GridMeasure1D):
    if not a.same_grid(b):
        raise GridMismatchError(
            f"grids differ: ({a.lo}, {a.hi}, {a.n}) vs ({b.lo}, {b.hi}, {b.n})")


def _cumulative(w: np.ndarray) -> np.ndarray:
    cum = np.minimum(np.concatenate([[0.0], np.cumsum(w)]), 1.0)
    cum[-1] = 1.0
    return np.maximum.accumulate(cum)


def grid_w2(a: GridMeasure1D, b: GridMeasure1D) -> float:
    """Exact squared W2 between piecewise-constant laws via the quantile coupling.

    Both quantile functions are linear between consecutive breakpoints of the merged
    cumulative masses, so each piece of ``int (F^-1 - G^-1)^2 du`` is integrated exactly.
    """
    _require_same_grid(a, b)
    edges = a.edges
    cum_a = _cumulative(a.weights)
    cum_b = _cumulative(b.weights)
    u = np.unique(np.concatenate([cum_a, cum_b]))
    u = u[(u >= 0) & (u <= 1)]
    u0, u1 = u[:-1], u[1:]
    keep = u1 > u0
    u0, u1 = u0[keep], u1[keep]

    dx = a.dx

    def endpoints(cum):
        # [u0, u1) sits inside one cell; cum[idx + 1] >= u1 > u0 >= cum[idx]
        idx = np.clip(np.searchsorted(cum, u0, side="right") - 1, 0, a.n - 1)
        base, mass = cum[idx], cum[idx + 1] - cum[idx]
        x0 = edges[idx] + np.clip((u0 - base) / mass, 0.0, 1.0) * dx
        x1 = edges[idx] + np.clip((u1 - base) / mass, 0.0, 1.0) * dx
        return x0, x1

    xa0, xa1 = endpoints(cum_a)
    xb0, xb1 = endpoints(cum_b)
    d0, d1 = xa0 - xb0, xa1 - xb1
    return float(np.sum((u1 - u0) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0))


class GridDivergences(NamedTuple):
    tv: float
    kl: float
    chi2: float
    w2: float


def grid_divergences(a: GridMeasure1D, b: GridMeasure1D) -> GridDivergences:
    """TV, KL(a||b), chi^2(a||b) and W2^2 between two laws on the same grid."""
    _require_same_grid(a, b)
    wa, wb = a.weights, b.weights
    tv = grid_tv(a, b)
    sa = wa > 0
    if np.any(sa & (wb == 0)):
        kl = chi2 = math.inf
    else:
        ra = wa[sa] / wb[sa]
        kl = max(0.0, float(np.sum(wa[sa] * np.log(ra))))
        chi2 = max(0.0, float(np.sum(wa[sa] * ra)) - 1.0)
    return GridDivergences(tv, kl, chi2, grid_w2(a, b))
