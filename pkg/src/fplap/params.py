"""Parameters (N, s, p), derived exponents and regime classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from scipy.optimize import brentq

from .errors import ValidationError

DEFAULT_REGIME_TOL = 1e-12


@dataclass(frozen=True)
class Params:
    N: int
    s: float
    p: float

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValidationError(f"N must be a positive integer, got {self.N!r}")
        if not (0.0 < self.s < 1.0):
            raise ValidationError(f"s must lie in (0,1), got {self.s!r}")
        if not (1.0 < self.p < 2.0):
            raise ValidationError(f"p must lie in (1,2), got {self.p!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "s", float(self.s))
        object.__setattr__(self, "p", float(self.p))

    @property
    def sp(self) -> float:
        return self.s * self.p


class Regime(str, enum.Enum):
    VeryFast = "VeryFast"
    CriticalPc = "CriticalPc"
    LowerGood = "LowerGood"
    CriticalP1 = "CriticalP1"
    UpperGood = "UpperGood"


@dataclass(frozen=True)
class Exponents:
    """Exponents of the self-similar theory.

    ``alpha`` and ``beta`` are ``None`` when p <= p_c: there is no
    mass-preserving self-similar scaling in that range.
    """

    alpha: Optional[float]
    beta: Optional[float]
    gamma: float
    p_c: float
    p_1: float
    sigma: float
    q_star: float

    @property
    def self_similar(self) -> bool:
        return self.beta is not None

    def require_self_similar(self):
        if self.beta is None:
            raise ValidationError("alpha/beta undefined (self-similarity fails for p <= p_c)")
        return self.alpha, self.beta


def p_c_of(N: float, s: float) -> float:
    return 2.0 * N / (N + s)


def p1_closed_form(lam: float) -> float:
    """p_1 as a function of lam = N/s."""
    return 0.5 * (math.sqrt((lam - 1.0) ** 2 + 8.0 * lam) - lam + 1.0)


def p1_root(N: float, s: float) -> float:
    """Root in (1,2) of s p (p-1) = N (2-p)."""
    f = lambda p: s * p * (p - 1.0) - N * (2.0 - p)
    return brentq(f, 1.0, 2.0, xtol=1e-15, rtol=8.9e-16)


def derive_exponents(params: Params) -> Exponents:
    N, s, p = params.N, params.s, params.p
    sp = s * p
    pc = p_c_of(N, s)
    p1 = p1_closed_form(N / s)
    p1r = p1_root(N, s)
    if abs(p1 - p1r) > 1e-12:
        raise ValidationError(f"p_1 closed form {p1!r} disagrees with root {p1r!r}")
    gamma = sp / (2.0 - p)
    sigma = sp - (2.0 - p) * (N + sp)
    q_star = N * (2.0 - p) / sp
    denom = sp - N * (2.0 - p)
    if p > pc and denom > 0:
        beta = 1.0 / denom
        alpha = N * beta
    else:
        alpha = beta = None
    return Exponents(alpha, beta, gamma, pc, p1, sigma, q_star)


def classify_regime(params: Params, tol: float = DEFAULT_REGIME_TOL) -> Regime:
    ex = derive_exponents(params)
    p = params.p
    if abs(p - ex.p_c) <= tol:
        return Regime.CriticalPc
    if abs(p - ex.p_1) <= tol:
        return Regime.CriticalP1
    if p < ex.p_c:
        return Regime.VeryFast
    if p < ex.p_1:
        return Regime.LowerGood
    return Regime.UpperGood


def decay_exponent(params: Params, tol: float = DEFAULT_REGIME_TOL) -> float:
    """Spatial decay exponent of solutions, used for the power-tail closure.

    gamma for p_c < p < p_1 (fast-diffusion tail), N+sp at and above p_1.
    For p <= p_c, gamma <= N is not integrable, so the fractional rate N+sp
    of the data tail is used there as well.
    """
    reg = classify_regime(params, tol)
    if reg is Regime.LowerGood:
        return params.sp / (2.0 - params.p)
    return params.N + params.sp
