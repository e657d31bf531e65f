"""Langevin dynamics, Langevin Monte Carlo and the Proximal Sampler.

Ensembles are advanced chain-parallel.  Chain ``i`` draws all of its noise from
the counter-based stream ``(seed, i)`` addressed by step number, so results are
bit-identical however chains are chunked across threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    NonFiniteError,
    PreconditionError,
    ProxSolverError,
    RejectionLimitError,
)
from .measures import IsotropicGaussian
from .potentials import Potential, gaussian_potential
from .rng import Purpose, RngStream, batch_normal, batch_uniform

__all__ = [
    "EnsembleMeta",
    "OracleStats",
    "ParticleEnsemble",
    "ProxResult",
    "ProxSamplerConfig",
    "lmc_gaussian_recursion",
    "lmc_run",
    "lmc_step",
    "ou_flow",
    "prox_gaussian_recursion",
    "prox_point",
    "prox_sampler_run",
    "rgo_sample",
    "rgo_sample_batch",
    "sample_ensemble",
]


@dataclass(frozen=True)
class EnsembleMeta:
    seed: int
    n_chains: int
    step_count: int = 0
    algorithm: str = "init"


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """``n_chains`` points in R^d; row ``i`` is chain ``i``."""

    points: np.ndarray
    meta: EnsembleMeta

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must have shape (n_chains, dim)")
        if pts.shape[0] != self.meta.n_chains:
            raise ValueError("meta.n_chains does not match the number of points")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_chains(self) -> int:
        return self.points.shape[0]

    def advanced(self, points: np.ndarray, steps: int, algorithm: str) -> "ParticleEnsemble":
        meta = replace(self.meta, step_count=self.meta.step_count + steps, algorithm=algorithm)
        return ParticleEnsemble(points, meta)


def sample_ensemble(law: IsotropicGaussian, n_chains: int, seed: int) -> ParticleEnsemble:
    """Draw chain initial states from ``law`` (a Dirac law gives identical points)."""
    z = batch_normal(seed, np.arange(n_chains), law.dim, purpose=Purpose.INIT)
    return ParticleEnsemble(law.mean + law.std * z, EnsembleMeta(seed, n_chains))


def _chunks(n: int, threads: int) -> list[slice]:
    threads = max(1, min(int(threads), n)) if n else 1
    bounds = np.linspace(0, n, threads + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def _map_chunks(fn, n: int, threads: int) -> list:
    parts = _chunks(n, threads)
    if len(parts) == 1:
        return [fn(parts[0])]
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        return list(pool.map(fn, parts))


# --------------------------------------------------------------------------- #
# Ornstein-Uhlenbeck and Langevin Monte Carlo


def ou_flow(init: IsotropicGaussian, target_variance: float, t: float) -> IsotropicGaussian:
    """Law at time ``t`` of the Langevin diffusion towards N(0, target_variance I)."""
    if not target_variance > 0:
        raise ValueError("target_variance must be positive")
    if t < 0:
        raise ValueError("t must be nonnegative")
    decay = math.exp(-t / target_variance)
    var = target_variance + (init.variance - target_variance) * decay * decay
    return IsotropicGaussian(init.mean * decay, max(var, 0.0))


def lmc_gaussian_recursion(init: IsotropicGaussian, target_variance: float, h: float,
                           k: int) -> IsotropicGaussian:
    """Exact law of LMC after ``k`` steps on the quadratic target N(0, target_variance I)."""
    c = 1.0 - h / target_variance
    mean, var = init.mean.copy(), init.variance
    for _ in range(k):
        mean = c * mean
        var = c * c * var + 2.0 * h
    return IsotropicGaussian(mean, var)


def _check_lmc_step(pot: Potential, h: float):
    if h < 0:
        raise ValueError("step size must be nonnegative")
    s2 = pot.quadratic_variance
    if s2 is not None and h >= 2 * s2:
        raise PreconditionError(f"LMC diverges on a quadratic target unless h < 2 sigma2 = {2 * s2}")


def _lmc_update(x, pot, h, noise):
    g = pot.gradient(x)
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.all(np.isfinite(g), axis=-1))[0]
        raise NonFiniteError(f"non-finite gradient at {x[bad]!r}", point=x[bad].copy())
    out = x - h * g + math.sqrt(2.0 * h) * noise
    if not np.all(np.isfinite(out)):
        bad = np.flatnonzero(~np.all(np.isfinite(out), axis=-1))[0]
        raise NonFiniteError(f"LMC iterate left the finite range from {x[bad]!r}", point=x[bad].copy())
    return out


def lmc_step(x, pot: Potential, h: float, rng: RngStream, step: int = 0) -> np.ndarray:
    """One Euler-Maruyama step ``x - h grad V(x) + sqrt(2h) xi``."""
    _check_lmc_step(pot, h)
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != pot.dim:
        raise DimensionMismatchError("point and potential dimensions differ")
    noise = rng.normal(pot.dim, step=step, purpose=Purpose.LMC)
    return _lmc_update(x, pot, h, noise[None, :])[0]


def lmc_run(init: ParticleEnsemble, pot: Potential, h: float, n_steps: int, *,
            threads: int = 1, callback: Optional[Callable[[int, np.ndarray], None]] = None
            ) -> ParticleEnsemble:
    """Advance every chain ``n_steps`` LMC steps.

    ``callback(step_count, points)`` is invoked after each step.
    """
    _check_lmc_step(pot, h)
    if init.dim != pot.dim:
        raise DimensionMismatchError("ensemble and potential dimensions differ")
    seed, start = init.meta.seed, init.meta.step_count
    ids = np.arange(init.n_chains)
    x = np.array(init.points)
    for j in range(n_steps):
        step = start + j

        def work(sl, x=x, step=step):
            noise = batch_normal(seed, ids[sl], pot.dim, step=step, purpose=Purpose.LMC)
            return _lmc_update(x[sl], pot, h, noise)

        x = np.concatenate(_map_chunks(work, init.n_chains, threads))
        if callback is not None:
            callback(step + 1, x)
    return init.advanced(x, n_steps, "lmc")


# --------------------------------------------------------------------------- #
# Proximal Sampler


class ProxResult(NamedTuple):
    xstar: np.ndarray
    grad_norm: np.ndarray
    iters: np.ndarray


def prox_point(y, pot: Potential, h: float, tol: float = 1e-10, max_iter: int = 100_000
               ) -> ProxResult:
    """Minimize ``V(x) + |x - y|^2 / (2h)`` by gradient descent.

    The objective is ``(alpha + 1/h)``-strongly convex.  With finite ``beta`` the
    fixed step ``1 / (beta + 1/h)`` converges linearly; for unbounded curvature
    each point backtracks until the gradient norm decreases.  Accepts one point of shape
    ``(d,)`` or a batch ``(n, d)``; the returned arrays follow the input shape.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if pot.alpha < 0:
        raise PreconditionError("potential must be convex")
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    x = y.copy()
    iters = np.zeros(y.shape[0], dtype=np.int64)

    def grad(xx, yy):
        return pot.gradient(xx) + (xx - yy) / h

    g = grad(x, y)
    gnorm = np.linalg.norm(g, axis=-1)
    active = np.flatnonzero(gnorm > tol)
    eta_fixed = 1.0 / (pot.beta + 1.0 / h) if pot.smooth else None
    eta_bt = np.full(y.shape[0], h)
    it = 0
    while active.size:
        if it >= max_iter:
            raise ProxSolverError(
                f"prox solver hit {max_iter} iterations; worst residual {gnorm.max():.3e}",
                last_iterate=x[active].copy(), residual=float(gnorm.max()))
        xa, ya, ga = x[active], y[active], g[active]
        if eta_fixed is not None:
            xa = xa - eta_fixed * ga
            ga = grad(xa, ya)
        else:
            # strong convexity makes |grad| strictly decrease for small enough steps;
            # unlike an Armijo test this stays decidable at round-off level
            gn = gnorm[active]
            eta = np.minimum(2.0 * eta_bt[active], h)
            todo = np.ones(active.size, dtype=bool)
            cand, gc = xa.copy(), ga.copy()
            for _ in range(200):
                cand[todo] = xa[todo] - eta[todo, None] * ga[todo]
                gc[todo] = grad(cand[todo], ya[todo])
                todo &= ~(np.linalg.norm(gc, axis=-1) < gn)
                if not todo.any():
                    break
                eta[todo] *= 0.5
            eta_bt[active] = eta
            xa, ga = cand, gc
        x[active] = xa
        g[active] = ga
        gnorm[active] = np.linalg.norm(g[active], axis=-1)
        iters[active] += 1
        active = active[gnorm[active] > tol]
        it += 1
    if single:
        return ProxResult(x[0], gnorm[0], iters[0])
    return ProxResult(x, gnorm, iters)


@dataclass
class OracleStats:
    proposals: int = 0
    acceptances: int = 0
    inner_solver_iterations: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.acceptances / self.proposals if self.proposals else math.nan

    def merge(self, other: "OracleStats") -> "OracleStats":
        self.proposals += other.proposals
        self.acceptances += other.acceptances
        self.inner_solver_iterations += other.inner_solver_iterations
        return self


@dataclass(frozen=True)
class ProxSamplerConfig:
    """Step size, target and backward-step oracle of a Proximal Sampler run.

    ``oracle="exact-gaussian"`` samples the Gaussian conditional directly and needs
    a Gaussian target; ``oracle="rejection"`` uses the convexity envelope and needs
    ``beta < inf``.
    """

    h: float
    target: Union[Potential, IsotropicGaussian]
    oracle: str = "rejection"
    max_rejection_rounds: int = 10_000
    prox_tol: float = 1e-10
    potential: Potential = field(init=False, repr=False)

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step size h must be positive")
        if self.oracle not in ("exact-gaussian", "rejection"):
            raise ValueError(f"unknown oracle {self.oracle!r}")
        if isinstance(self.target, IsotropicGaussian):
            if self.target.is_dirac:
                raise ValueError("target must have positive variance")
            pot = gaussian_potential(self.target.mean, self.target.variance)
        else:
            pot = self.target
        object.__setattr__(self, "potential", pot)
        if self.oracle == "exact-gaussian" and self.gaussian_target is None:
            raise PreconditionError("exact-gaussian oracle requires a Gaussian target")
        if self.oracle == "rejection" and not pot.smooth:
            raise PreconditionError("rejection oracle requires beta < inf")
        if self.max_rejection_rounds < 1 or not self.prox_tol > 0:
            raise ValueError("max_rejection_rounds must be >= 1 and prox_tol > 0")

    @property
    def dim(self) -> int:
        return self.potential.dim

    @property
    def gaussian_target(self) -> Optional[IsotropicGaussian]:
        if isinstance(self.target, IsotropicGaussian):
            return self.target
        s2 = self.target.quadratic_variance
        if s2 is not None:
            return IsotropicGaussian.standard(self.target.dim, s2)
        return None


def rgo_sample_batch(y: np.ndarray, cfg: ProxSamplerConfig, seed: int, chain_ids, step: int,
                     stats: Optional[OracleStats] = None) -> np.ndarray:
    """Backward step for many chains: draw ``x ~ exp(-V(x) - |x - y|^2 / (2h))``.

    Rejection scheme: with ``x*`` the proximal point, propose ``x ~ N(x*, h I)`` and
    accept with probability ``exp(-f(x) + f(x*) + |x - x*|^2 / (2h))``.  Convexity
    gives ``f(x) >= f(x*) + |x - x*|^2 / (2h)``, so the proposal density times
    ``exp(-f(x*))`` dominates the target and accepted draws are exact.
    """
    stats = stats if stats is not None else OracleStats()
    y = np.atleast_2d(np.asarray(y, dtype=float))
    ids = np.asarray(chain_ids, dtype=np.int64)
    n, d = y.shape
    h = cfg.h
    if cfg.oracle == "exact-gaussian":
        tg = cfg.gaussian_target
        s2 = tg.variance
        mean = (y * s2 + tg.mean * h) / (s2 + h)
        z = batch_normal(seed, ids, d, step=step, purpose=Purpose.PROPOSAL)
        stats.proposals += n
        stats.acceptances += n
        return mean + math.sqrt(s2 * h / (s2 + h)) * z

    pot = cfg.potential
    res = prox_point(y, pot, h, cfg.prox_tol)
    stats.inner_solver_iterations += int(res.iters.sum())
    xstar = res.xstar
    f_star = pot.value(xstar) + 0.5 * np.sum((xstar - y) ** 2, axis=-1) / h
    out = np.empty_like(y)
    pending = np.arange(n)
    for r in range(cfg.max_rejection_rounds):
        pid = ids[pending]
        xs, yp = xstar[pending], y[pending]
        x = xs + math.sqrt(h) * batch_normal(seed, pid, d, step=step, purpose=Purpose.PROPOSAL, round=r)
        f_x = pot.value(x) + 0.5 * np.sum((x - yp) ** 2, axis=-1) / h
        log_acc = np.minimum(0.0, -f_x + f_star[pending] + 0.5 * np.sum((x - xs) ** 2, axis=-1) / h)
        u = batch_uniform(seed, pid, 1, step=step, purpose=Purpose.ACCEPT, round=r)[:, 0]
        ok = np.log(u) <= log_acc
        stats.proposals += pending.size
        stats.acceptances += int(ok.sum())
        out[pending[ok]] = x[ok]
        pending = pending[~ok]
        if not pending.size:
            return out
    raise RejectionLimitError(
        f"chain {int(ids[pending[0]])}: no acceptance in {cfg.max_rejection_rounds} rounds at "
        f"step {step}; h may be too large for this target and dimension",
        chain=int(ids[pending[0]]), step=step)


def rgo_sample(y, cfg: ProxSamplerConfig, rng: RngStream, stats: Optional[OracleStats] = None,
               step: int = 0) -> np.ndarray:
    """Single-chain restricted Gaussian oracle drawing from stream ``rng``."""
    y = np.asarray(y, dtype=float).reshape(1, -1)
    if y.shape[1] != cfg.dim:
        raise DimensionMismatchError("point and target dimensions differ")
    return rgo_sample_batch(y, cfg, rng.seed, [rng.stream_id], step, stats)[0]


def prox_sampler_run(init: ParticleEnsemble, cfg: ProxSamplerConfig, k_steps: int, *,
                     threads: int = 1, stats: Optional[OracleStats] = None,
                     callback: Optional[Callable[[int, np.ndarray], None]] = None
                     ) -> ParticleEnsemble:
    """Advance every chain ``k_steps`` forward/backward Proximal Sampler iterations."""
    if k_steps < 0:
        raise ValueError("k_steps must be nonnegative")
    if init.dim != cfg.dim:
        raise DimensionMismatchError("ensemble and target dimensions differ")
    stats = stats if stats is not None else OracleStats()
    seed, start = init.meta.seed, init.meta.step_count
    ids = np.arange(init.n_chains)
    x = np.array(init.points)
    sq_h = math.sqrt(cfg.h)
    for j in range(k_steps):
        step = start + j

        def work(sl, x=x, step=step):
            local = OracleStats()
            y = x[sl] + sq_h * batch_normal(seed, ids[sl], cfg.dim, step=step, purpose=Purpose.FORWARD)
            try:
                return rgo_sample_batch(y, cfg, seed, ids[sl], step, local), local
            except ProxSolverError as exc:
                raise ProxSolverError(f"step {step}, chains {sl.start}..{sl.stop - 1}: {exc}",
                                      exc.last_iterate, exc.residual) from exc

        parts = _map_chunks(work, init.n_chains, threads)
        x = np.concatenate([p[0] for p in parts])
        for _, local in parts:
            stats.merge(local)
        if callback is not None:
            callback(step + 1, x)
    return init.advanced(x, k_steps, f"prox-{cfg.oracle}")


def prox_gaussian_recursion(init: IsotropicGaussian, target_variance: float, h: float,
                            k: int) -> IsotropicGaussian:
    """Exact law after ``k`` Proximal Sampler steps towards N(0, target_variance I)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    s2 = target_variance
    c = s2 / (s2 + h)
    mean, var = init.mean.copy(), init.variance
    for _ in range(k):
        mean = c * mean
        var = c * c * (var + h) + s2 * h / (s2 + h)
    return IsotropicGaussian(mean, var)
