"""Numerical checks of transport, regularization, Poincaré and mixing inequalities.

Every check returns :class:`InequalityReport` values.  A report holds when
``lhs <= rhs + tol * max(1, |rhs|)``; an infinite right-hand side is reported as
holding with ``vacuous=True``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional, Union

import numpy as np

from .exceptions import PreconditionError
from .measures import (
    GridMeasure1D,
    IsotropicGaussian,
    gaussian_chi2,
    gaussian_kl,
    gaussian_tv,
    gaussian_w2,
    grid_divergences,
    grid_tv,
    grid_w2,
    poincare_grid_1d,
    poincare_of_gaussian,
)
from .profiles import MixingProfile, measure_tmix
from .samplers import ou_flow, prox_gaussian_recursion

__all__ = [
    "HatCp",
    "InequalityReport",
    "Interpolation",
    "TOL_CLOSED_FORM",
    "build_interpolation",
    "check_chi2_contraction_prox",
    "check_lpi_langevin",
    "check_lpi_prox",
    "check_mixing_bound_ld",
    "check_mixing_bound_prox",
    "check_parabolic_reg_ld",
    "check_parabolic_reg_prox",
    "check_transport_variance",
    "check_window_bound_ld",
    "check_window_bound_prox",
    "check_wtv",
    "check_wtv_proof_chain",
    "cutoff_ratio",
    "product_condition",
]

TOL_CLOSED_FORM = 1e-9


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    lhs_method: str
    rhs_method: str
    context: dict = field(default_factory=dict)
    tol: float = TOL_CLOSED_FORM
    slack: float = field(init=False)
    holds: bool = field(init=False)
    vacuous: bool = field(init=False)

    def __post_init__(self):
        lhs, rhs = float(self.lhs), float(self.rhs)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "vacuous", math.isinf(rhs) and rhs > 0)
        object.__setattr__(self, "slack", rhs - lhs if not self.vacuous else math.inf)
        ok = self.vacuous or lhs <= rhs + self.tol * max(1.0, abs(rhs))
        object.__setattr__(self, "holds", bool(ok))

    def scaled(self, factor: float) -> "InequalityReport":
        """Same report with the right-hand side multiplied by ``factor``."""
        return replace(self, rhs=self.rhs * factor)


@dataclass(frozen=True)
class HatCp:
    """Discrete-time Poincaré scale ``1 + C_P / h``."""

    value: float

    def __post_init__(self):
        if not self.value >= 1:
            raise ValueError("HatCp must be >= 1")

    @classmethod
    def of(cls, cp: float, h: float) -> "HatCp":
        if not h > 0:
            raise ValueError("h must be positive")
        return cls(1.0 + float(cp) / h)

    def __float__(self):
        return self.value


Law = Union[IsotropicGaussian, GridMeasure1D]


def _tv_method(a: IsotropicGaussian, b: IsotropicGaussian) -> str:
    if a.variance == b.variance or a.is_dirac or b.is_dirac or a.dim > 1:
        return "closed-form"
    return "quadrature"


def check_wtv(mu: Law, nu: Law) -> InequalityReport:
    """``W^2(mu, nu) <= 4 (C_P(mu) + C_P(nu)) TV / (1 - TV)``."""
    if isinstance(mu, GridMeasure1D) and isinstance(nu, GridMeasure1D):
        w2, tv = grid_w2(mu, nu), grid_tv(mu, nu)
        cp_mu, cp_nu = poincare_grid_1d(mu).value, poincare_grid_1d(nu).value
        lhs_m, rhs_m = "grid", "grid+grid-eigensolve"
    elif isinstance(mu, IsotropicGaussian) and isinstance(nu, IsotropicGaussian):
        w2, tv = gaussian_w2(mu, nu), gaussian_tv(mu, nu)
        cp_mu, cp_nu = poincare_of_gaussian(mu).value, poincare_of_gaussian(nu).value
        lhs_m, rhs_m = "closed-form", _tv_method(mu, nu)
    else:
        raise TypeError("check_wtv needs two Gaussians or two grid measures")
    if tv == 0:
        rhs = 0.0
    elif tv >= 1 or math.isinf(cp_mu + cp_nu):
        rhs = math.inf
    else:
        rhs = 4.0 * (cp_mu + cp_nu) * tv / (1.0 - tv)
    return InequalityReport("wtv", w2, rhs, lhs_m, rhs_m,
                            {"tv": tv, "cp_mu": cp_mu, "cp_nu": cp_nu})


def check_transport_variance(mu: IsotropicGaussian, nu: IsotropicGaussian) -> InequalityReport:
    """``W^2(mu, nu) <= 2 C_P(mu) chi^2(nu || mu)``."""
    w2 = gaussian_w2(mu, nu)
    chi2 = gaussian_chi2(nu, mu)
    cp = poincare_of_gaussian(mu).value
    rhs = 0.0 if chi2 == 0 else 2.0 * cp * chi2
    return InequalityReport("transport_variance", w2, rhs, "closed-form", "closed-form",
                            {"chi2": chi2, "cp_mu": cp})


class Interpolation(NamedTuple):
    lam: GridMeasure1D
    ratio_a: float
    ratio_b: float
    bound: float
    tv: float


def build_interpolation(a: GridMeasure1D, b: GridMeasure1D) -> Interpolation:
    """Measure ``lambda ∝ min(a, b)`` with density ratios at most ``1 / (1 - TV)``."""
    tv = grid_tv(a, b)
    overlap_w = np.minimum(a.weights, b.weights)
    overlap = float(overlap_w.sum())
    if overlap <= 0 or tv >= 1:
        raise PreconditionError("interpolation needs TV(a, b) < 1")
    lam = GridMeasure1D(a.lo, a.hi, overlap_w / overlap)

    def max_ratio(w):
        pos = w > 0
        return float(np.max(lam.weights[pos] / w[pos]))

    # 1 - TV equals the overlap mass; summing min(a, b) avoids cancellation when TV ~ 1
    return Interpolation(lam, max_ratio(a.weights), max_ratio(b.weights), 1.0 / overlap, tv)


def check_wtv_proof_chain(a: GridMeasure1D, b: GridMeasure1D) -> list[InequalityReport]:
    """Re-run the interpolation proof of the W-TV bound step by step on grid measures."""
    itp = build_interpolation(a, b)
    lam = itp.lam
    cp_a, cp_b = poincare_grid_1d(a).value, poincare_grid_1d(b).value
    w_ab = grid_w2(a, b)
    w_al, w_bl = grid_w2(a, lam), grid_w2(b, lam)
    chi_a = grid_divergences(lam, a).chi2
    chi_b = grid_divergences(lam, b).chi2
    ctx = {"tv": itp.tv, "cp_a": cp_a, "cp_b": cp_b}
    tol = 1e-9
    return [
        InequalityReport("interp_ratio_a", itp.ratio_a, itp.bound, "grid", "grid", ctx, 1e-12),
        InequalityReport("interp_ratio_b", itp.ratio_b, itp.bound, "grid", "grid", ctx, 1e-12),
        InequalityReport("wtv_triangle", w_ab, 2 * w_al + 2 * w_bl, "grid", "grid", ctx, tol),
        InequalityReport("wtv_transport_a", w_al, 2 * cp_a * chi_a, "grid", "grid-eigensolve", ctx,
                         1e-6),
        InequalityReport("wtv_transport_b", w_bl, 2 * cp_b * chi_b, "grid", "grid-eigensolve", ctx,
                         1e-6),
        InequalityReport("wtv_chi2_crude_a", chi_a, itp.ratio_a - 1, "grid", "grid", ctx, tol),
        InequalityReport("wtv_chi2_crude_b", chi_b, itp.ratio_b - 1, "grid", "grid", ctx, tol),
    ]


def _target(init: IsotropicGaussian, sigma2: float) -> IsotropicGaussian:
    return IsotropicGaussian.standard(init.dim, sigma2)


def check_parabolic_reg_ld(init: IsotropicGaussian, sigma2: float,
                           t_grid: Iterable[float]) -> list[InequalityReport]:
    """``KL(mu_t || pi) <= W^2(mu_0, pi) / (4t)`` along the exact Langevin flow."""
    pi = _target(init, sigma2)
    w2 = gaussian_w2(init, pi)
    out = []
    for t in t_grid:
        if not t > 0:
            raise PreconditionError("times must be positive")
        kl = gaussian_kl(ou_flow(init, sigma2, t), pi)
        out.append(InequalityReport("parabolic_reg_ld", kl, w2 / (4.0 * t), "closed-form",
                                    "closed-form", {"t": float(t), "sigma2": sigma2, "w2_0": w2}))
    return out


def check_parabolic_reg_prox(init: IsotropicGaussian, sigma2: float, h: float,
                             k_grid: Iterable[int]) -> list[InequalityReport]:
    """``KL(mu_k || pi) <= W^2(mu_0, pi) / (k h)`` along the exact Proximal Sampler law."""
    pi = _target(init, sigma2)
    w2 = gaussian_w2(init, pi)
    out = []
    for k in k_grid:
        if k < 1:
            raise PreconditionError("k must be >= 1")
        kl = gaussian_kl(prox_gaussian_recursion(init, sigma2, h, int(k)), pi)
        out.append(InequalityReport("parabolic_reg_prox", kl, w2 / (k * h), "closed-form",
                                    "closed-form", {"k": int(k), "h": h, "sigma2": sigma2,
                                                    "w2_0": w2}))
    return out


def check_chi2_contraction_prox(init: IsotropicGaussian, sigma2: float, h: float,
                                k: int) -> InequalityReport:
    """``chi^2(mu_k || pi) <= (1 + h / C_P(pi))^(-2k) chi^2(mu_0 || pi)``.

    The context also carries the exponential form ``exp(-2k / hatC_P) chi^2_0``,
    which dominates the power form because ``e^(1/u) <= u / (u - 1)`` for ``u > 1``.
    """
    pi = _target(init, sigma2)
    chi0 = gaussian_chi2(init, pi)
    lhs = gaussian_chi2(prox_gaussian_recursion(init, sigma2, h, k), pi)
    hat = HatCp.of(sigma2, h).value
    if math.isinf(chi0):
        power = expo = math.inf
    else:
        power = math.exp(-2.0 * k * math.log1p(h / sigma2)) * chi0
        expo = math.exp(-2.0 * k / hat) * chi0
    return InequalityReport("chi2_contraction_prox", lhs, power, "closed-form", "closed-form",
                            {"k": k, "h": h, "sigma2": sigma2, "chi2_0": chi0, "rhs_exp": expo,
                             "hat_cp": hat})


def check_lpi_langevin(init: IsotropicGaussian, sigma2: float,
                       t_grid: Iterable[float]) -> list[InequalityReport]:
    """``C_P(mu_t) <= C_P(mu_0) + 2t``."""
    cp0 = poincare_of_gaussian(init).value
    return [InequalityReport("lpi_langevin", poincare_of_gaussian(ou_flow(init, sigma2, t)).value,
                             cp0 + 2.0 * t, "closed-form", "closed-form",
                             {"t": float(t), "sigma2": sigma2}, 1e-12)
            for t in t_grid]


def check_lpi_prox(init: IsotropicGaussian, sigma2: float, h: float,
                   k_grid: Iterable[int]) -> list[InequalityReport]:
    """``C_P(mu_k) <= C_P(mu_0) + 2 k h``."""
    cp0 = poincare_of_gaussian(init).value
    out = []
    for k in k_grid:
        law = prox_gaussian_recursion(init, sigma2, h, int(k))
        out.append(InequalityReport("lpi_prox", poincare_of_gaussian(law).value, cp0 + 2.0 * k * h,
                                    "closed-form", "closed-form",
                                    {"k": int(k), "h": h, "sigma2": sigma2}, 1e-12))
    return out


def _profile_method(p: MixingProfile) -> str:
    return {"closed-form": "closed-form", "recursion": "closed-form"}.get(p.source, "monte-carlo")


def check_mixing_bound_ld(profile: MixingProfile, cp_pi: float, kl0: float, eps: float,
                          w2_0: Optional[float] = None) -> InequalityReport:
    """``t_mix(eps) <= C_P(pi) (1 + KL(mu_0 || pi)) / eps``.

    With ``w2_0`` the Pinsker form ``W^2(mu_0, pi) / (8 eps^2)`` is checked as well and
    must also hold.
    """
    if not 0 < eps < 1 or math.isinf(kl0):
        raise PreconditionError("need 0 < eps < 1 and finite KL")
    t = measure_tmix(profile, eps)
    rhs = cp_pi * (1.0 + kl0) / eps
    ctx = {"eps": eps, "cp_pi": cp_pi, "kl0": kl0}
    if w2_0 is not None:
        ctx["rhs_pinsker"] = w2_0 / (8.0 * eps * eps)
        rhs_eff = min(rhs, ctx["rhs_pinsker"])
    else:
        rhs_eff = rhs
    rep = InequalityReport("mixing_bound_ld", t, rhs_eff, _profile_method(profile), "closed-form", ctx)
    return replace(rep, context={**ctx, "rhs_basic": rhs})


def check_mixing_bound_prox(profile: MixingProfile, hat_cp: HatCp, kl0: float, eps: float,
                            w2_0: Optional[float] = None, h: Optional[float] = None
                            ) -> InequalityReport:
    """``t_mix(eps) <= ceil(hatC_P(pi) (1 + KL(mu_0 || pi)) / eps)`` in steps."""
    if not 0 < eps < 1 or math.isinf(kl0):
        raise PreconditionError("need 0 < eps < 1 and finite KL")
    k = measure_tmix(profile, eps)
    rhs = float(math.ceil(float(hat_cp) * (1.0 + kl0) / eps))
    ctx = {"eps": eps, "hat_cp": float(hat_cp), "kl0": kl0, "rhs_lemma": rhs}
    rhs_eff = rhs
    if w2_0 is not None and h is not None:
        ctx["rhs_pinsker"] = float(math.ceil(w2_0 / (2.0 * h * eps * eps)))
        rhs_eff = min(rhs, ctx["rhs_pinsker"])
    return InequalityReport("mixing_bound_prox", k, rhs_eff, _profile_method(profile),
                            "closed-form", ctx)


def _window(profile: MixingProfile, eps: float) -> tuple[float, float]:
    if not 0 < eps < 0.5:
        raise PreconditionError("window bounds need 0 < eps < 1/2")
    return measure_tmix(profile, eps), measure_tmix(profile, 1.0 - eps)


def check_window_bound_ld(profile: MixingProfile, cp_pi: float, cp_mu0: float,
                          eps: float) -> InequalityReport:
    """``w_mix <= (3/eps) (C_P(pi) + sqrt(C_P(pi) C_P(mu_0)) + sqrt(C_P(pi) t_mix(1 - eps)))``."""
    t_eps, t_late = _window(profile, eps)
    rhs = 3.0 / eps * (cp_pi + math.sqrt(cp_pi * cp_mu0) + math.sqrt(cp_pi * t_late))
    return InequalityReport("window_bound_ld", t_eps - t_late, rhs, _profile_method(profile),
                            "closed-form", {"eps": eps, "tmix_eps": t_eps, "tmix_1meps": t_late,
                                            "cp_pi": cp_pi, "cp_mu0": cp_mu0})


def check_window_bound_prox(profile: MixingProfile, hat_cp_pi: HatCp, hat_cp_mu0: HatCp,
                            eps: float) -> InequalityReport:
    """Discrete analogue with constant 6 and ``hatC_P``; ties give a zero window (flagged)."""
    k_eps, k_late = _window(profile, eps)
    hp, hm = float(hat_cp_pi), float(hat_cp_mu0)
    rhs = 6.0 / eps * (hp + math.sqrt(hp * hm) + math.sqrt(hp * k_late))
    diff = k_eps - k_late
    return InequalityReport("window_bound_prox", max(0, diff), rhs, _profile_method(profile),
                            "closed-form", {"eps": eps, "tmix_eps": k_eps, "tmix_1meps": k_late,
                                            "hat_cp_pi": hp, "hat_cp_mu0": hm, "tie": diff == 0})


def cutoff_ratio(profile: MixingProfile, eps: float) -> float:
    """``t_mix(1 - eps) / t_mix(eps)``; tends to 1 under cutoff."""
    t_eps = measure_tmix(profile, eps)
    if t_eps == 0:
        raise ZeroDivisionError("t_mix(eps) = 0: the chain starts within eps of equilibrium")
    return measure_tmix(profile, 1.0 - eps) / t_eps


def product_condition(t_mix_eps: float, cp_pi: float, cp_mu0: float, discrete: bool = False,
                      h: Optional[float] = None) -> float:
    """``t_mix / (C + sqrt(C C_0))`` with ``C = C_P`` or, for the discrete chain, ``hatC_P``."""
    if discrete:
        if h is None:
            raise ValueError("discrete product condition needs h")
        cp_pi, cp_mu0 = HatCp.of(cp_pi, h).value, HatCp.of(cp_mu0, h).value
    denom = cp_pi + math.sqrt(cp_pi * cp_mu0)
    if not denom > 0:
        raise ZeroDivisionError("product condition denominator is zero")
    return t_mix_eps / denom
