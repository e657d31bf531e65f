"""Convex potentials V with gradients and curvature bounds alpha I <= Hess V <= beta I."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = ["Potential", "quadratic", "quartic", "logcosh", "gaussian_potential",
           "finite_difference_error"]


@dataclass(frozen=True)
class Potential:
    """A log-concave target ``exp(-V)``.

    ``value`` and ``gradient`` act on arrays of shape ``(..., dim)``; ``value``
    reduces the last axis.  ``tag`` identifies analytic cases, e.g.
    ``("quadratic", sigma2)`` for ``V(x) = |x|^2 / (2 sigma2)``.
    """

    dim: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    alpha: float
    beta: float
    tag: Optional[tuple] = None
    name: str = "potential"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if not (0 <= self.alpha <= self.beta):
            raise ValueError(f"need 0 <= alpha <= beta, got alpha={self.alpha}, beta={self.beta}")

    @property
    def quadratic_variance(self) -> Optional[float]:
        if self.tag and self.tag[0] == "quadratic":
            return float(self.tag[1])
        return None

    @property
    def smooth(self) -> bool:
        return math.isfinite(self.beta)


def gaussian_potential(mean, sigma2: float) -> Potential:
    """V(x) = |x - mean|^2 / (2 sigma2): the potential of N(mean, sigma2 I)."""
    m = np.asarray(mean, dtype=float).reshape(-1)
    return Potential(
        dim=m.size,
        value=lambda x: 0.5 * np.sum((np.asarray(x) - m) ** 2, axis=-1) / sigma2,
        gradient=lambda x: (np.asarray(x) - m) / sigma2,
        alpha=1.0 / sigma2,
        beta=1.0 / sigma2,
        tag=("quadratic", sigma2) if not np.any(m) else ("shifted-quadratic", sigma2),
        name=f"gaussian(sigma2={sigma2:g})",
    )


def quadratic(sigma2: float = 1.0, dim: int = 1) -> Potential:
    return gaussian_potential(np.zeros(dim), sigma2)


def quartic(dim: int = 1) -> Potential:
    """V(x) = sum x_i^4 / 4; convex but neither strongly convex nor smooth."""
    return Potential(
        dim=dim,
        value=lambda x: 0.25 * np.sum(np.asarray(x) ** 4, axis=-1),
        gradient=lambda x: np.asarray(x) ** 3,
        alpha=0.0,
        beta=math.inf,
        tag=("quartic",),
        name="quartic",
    )


def _logcosh(x):
    return np.logaddexp(x, -x) - math.log(2.0)


def logcosh(dim: int = 1) -> Potential:
    """V(x) = sum x_i^2 / 2 + log cosh x_i, with 1 <= V'' <= 2."""
    return Potential(
        dim=dim,
        value=lambda x: np.sum(0.5 * np.asarray(x) ** 2 + _logcosh(np.asarray(x)), axis=-1),
        gradient=lambda x: np.asarray(x) + np.tanh(x),
        alpha=1.0,
        beta=2.0,
        tag=("logcosh",),
        name="logcosh",
    )


def finite_difference_error(pot: Potential, points: np.ndarray, eps: float = 1e-5) -> float:
    """Largest ``|central difference - gradient . e|`` over unit coordinate directions."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    grad = pot.gradient(points)
    worst = 0.0
    for j in range(pot.dim):
        e = np.zeros(pot.dim)
        e[j] = eps
        fd = (pot.value(points + e) - pot.value(points - e)) / (2 * eps)
        worst = max(worst, float(np.max(np.abs(fd - grad[:, j]))))
    return worst
