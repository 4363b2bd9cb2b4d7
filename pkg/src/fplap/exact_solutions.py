"""Closed-form solutions and barriers used as oracles, data and envelopes.

Every evaluator is finite for r >= r_cap > 0; singular ones are held at
their r_cap value inside.  ``discretize`` samples a closed form on a grid
with r_cap = h by default.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional, Tuple

import numpy as np

from .errors import ValidationError
from .grid_field import Field, Grid
from .nonlinearity import Nonlinearity
from .operator import DiscreteOperator, PowerTail, TailClosure, build_weights, stationary_residual
from .params import Params, Regime, classify_regime, derive_exponents


class ClosedForm:
    name = "closed"
    singular = True

    def formula(self, r: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    @property
    def tail_exponent(self) -> float:
        raise NotImplementedError

    def as_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.name
        return d


@dataclass(frozen=True)
class VSS(ClosedForm):
    """C (t+T)^(1/(2-p)) r^-gamma, or C (T-t)^(1/(2-p)) r^-gamma when
    ``very_fast`` (continued by 0 for t >= T)."""

    C_inf: float
    T: float
    p: float
    gamma: float
    very_fast: bool = False
    name = "VSS"

    def formula(self, r, t):
        if self.very_fast:
            if t >= self.T:
                return np.zeros_like(r)
            a = (self.T - t) ** (1.0 / (2.0 - self.p))
        else:
            if not (t + self.T >= 0):
                raise ValidationError("VSS needs t + T >= 0")
            a = (t + self.T) ** (1.0 / (2.0 - self.p))
        return self.C_inf * a * r ** (-self.gamma)

    @property
    def tail_exponent(self):
        return self.gamma


@dataclass(frozen=True)
class BarrierLower(ClosedForm):
    C1: float
    gamma: float
    name = "BarrierLower"

    def formula(self, r, t):
        return self.C1 * r ** (-self.gamma)

    @property
    def tail_exponent(self):
        return self.gamma


@dataclass(frozen=True)
class BarrierUpper(ClosedForm):
    """C1 min(r^-(N+sp), 1)."""

    C1: float
    q: float
    name = "BarrierUpper"
    singular = False

    def formula(self, r, t):
        with np.errstate(divide="ignore"):
            return self.C1 * np.minimum(r ** (-self.q), 1.0)

    @property
    def tail_exponent(self):
        return self.q


@dataclass(frozen=True)
class BarrierCritical(ClosedForm):
    """C1 r^-(N+sp) log(r)^(1/(2-p)) for r > 2, held at its r = 2 value inside."""

    C1: float
    q: float
    p: float
    name = "BarrierCritical"
    singular = False

    def formula(self, r, t):
        rr = np.maximum(r, 2.0)
        return self.C1 * rr ** (-self.q) * np.log(rr) ** (1.0 / (2.0 - self.p))

    @property
    def tail_exponent(self):
        return self.q


@dataclass(frozen=True)
class Barenblatt(ClosedForm):
    """Local (s = 1) fast p-Laplacian profile (C + k r^(p/(p-1)))^(-(p-1)/(2-p))."""

    C: float
    k: float
    p: float
    name = "Barenblatt"
    singular = False

    def formula(self, r, t):
        e = self.p / (self.p - 1.0)
        return (self.C + self.k * r**e) ** (-(self.p - 1.0) / (2.0 - self.p))

    @property
    def tail_exponent(self):
        return self.p / (2.0 - self.p)


@dataclass(frozen=True)
class PowerPc(ClosedForm):
    """r^-N, stationary at p = p_c."""

    N: int
    name = "PowerPc"

    def formula(self, r, t):
        return r ** (-float(self.N))

    @property
    def tail_exponent(self):
        return float(self.N)


def eval_closed(cf: ClosedForm, r, t: float = 0.0, r_cap: Optional[float] = None):
    """Value at radius r (array or scalar) and time t.

    Singular variants are held at their r_cap value for r < r_cap; without
    r_cap they reject r = 0.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValidationError("radii must be finite and >= 0")
    if cf.singular:
        if r_cap is None:
            if np.any(r == 0):
                raise ValidationError(f"{cf.name} is singular at r=0; pass r_cap > 0")
        else:
            if not (r_cap > 0):
                raise ValidationError("r_cap must be > 0")
            r = np.maximum(r, r_cap)
    out = cf.formula(r, t)
    return out[()] if np.ndim(out) == 0 else out


def zeta_origin_value(coef: float, e: float, p: float, h: float) -> float:
    """Origin value for a sampled coef * r^-e seen through u -> u^(p-1).

    With a = e (p-1) in (0,1), h times the sum of (coef |jh|^-e)^(p-1) over
    j != 0 falls short of the integral of (coef |y|^-e)^(p-1) by
    2 |zeta(a)| coef^(p-1) h^(1-a); the origin node supplies exactly that.
    """
    from scipy.special import zeta

    a = e * (p - 1.0)
    if not (0.0 < a < 1.0):
        raise ValidationError(f"zeta cap needs 0 < e (p-1) < 1, got {a:g}")
    return coef * (2.0 * abs(float(zeta(a))) * h ** (-a)) ** (1.0 / (p - 1.0))


def discretize(cf: ClosedForm, grid: Grid, t: float = 0.0, r_cap: Optional[float] = None,
               cap: str = "value", p: Optional[float] = None) -> Field:
    """Sample cf on the grid.  ``cap="value"`` holds singular forms at their
    r_cap value (default h); ``cap="zeta"`` instead sets the origin node of
    a pure power by zeta_origin_value, which needs p."""
    vals = eval_closed(cf, np.abs(grid.x), t, grid.h if r_cap is None else r_cap)
    if cap == "zeta":
        if not isinstance(cf, (VSS, BarrierLower, PowerPc)):
            raise ValidationError(f"zeta cap applies to pure powers, not {cf.name}")
        if p is None:
            raise ValidationError("zeta cap needs p")
        coef = float(eval_closed(cf, 1.0, t))
        vals = np.array(vals)
        vals[grid.mid] = zeta_origin_value(coef, cf.tail_exponent, p, grid.h) if coef > 0 else 0.0
    elif cap != "value":
        raise ValidationError(f"cap must be value or zeta, got {cap!r}")
    return Field(grid, vals, max(t, 0.0))


_FORM_KEYS = {
    "vss": ("C_inf", "T"),
    "barrierlower": ("C1",),
    "barrierupper": ("C1",),
    "barriercritical": ("C1",),
    "barenblatt": ("C", "k"),
    "powerpc": (),
}


def closed_form(name: str, params: Params, **kw) -> ClosedForm:
    """Build a closed form by name with parameters completed from params.

    VSS: C_inf, T (C_inf defaults to the quadrature value); BarrierLower,
    BarrierUpper, BarrierCritical: C1; Barenblatt: C, k; PowerPc: none.
    """
    key = name.lower()
    if key not in _FORM_KEYS:
        raise ValidationError(f"unknown closed form {name!r}; expected one of {sorted(_FORM_KEYS)}")
    extra = set(kw) - set(_FORM_KEYS[key])
    if extra:
        raise ValidationError(f"closed form {name}: unknown parameters {sorted(extra)}")
    if key.startswith("barrier") and "C1" not in kw:
        raise ValidationError(f"closed form {name}: missing parameter C1")
    ex = derive_exponents(params)
    N, sp, p = params.N, params.sp, params.p
    if key == "vss":
        reg = classify_regime(params)
        if reg not in (Regime.LowerGood, Regime.VeryFast):
            raise ValidationError(f"VSS exists only for p < p_c or p_c < p < p_1, regime is {reg.value}")
        C = kw.get("C_inf")
        if C is None:
            from .constants import vss_amplitude

            C = vss_amplitude(params)
        return VSS(float(C), float(kw.get("T", 1.0)), p, ex.gamma, reg is Regime.VeryFast)
    if key == "barrierlower":
        return BarrierLower(float(kw["C1"]), ex.gamma)
    if key == "barrierupper":
        return BarrierUpper(float(kw["C1"]), N + sp)
    if key == "barriercritical":
        if classify_regime(params, 1e-9) is not Regime.CriticalP1:
            raise ValidationError(f"BarrierCritical needs p = p_1 = {ex.p_1:.12g}, got p = {p!r}")
        return BarrierCritical(float(kw["C1"]), N + sp, p)
    if key == "barenblatt":
        return Barenblatt(float(kw.get("C", 1.0)), float(kw.get("k", 1.0)), p)
    return PowerPc(N)


@dataclass(frozen=True)
class BarrierReport:
    kind: str
    sign: str
    annulus: Tuple[float, float]
    min_E: float
    max_E: float
    min_rel: float
    max_rel: float
    tol: float
    verdict: bool

    def as_dict(self):
        return asdict(self)


def _annulus_mask(grid: Grid, annulus, r_cap: float):
    lo, hi = annulus
    if not (lo < hi):
        raise ValidationError(f"annulus {annulus} is empty")
    if lo < 2.0 * r_cap:
        raise ValidationError(f"annulus must stay clear of the cap: lo={lo} < 2 r_cap={2 * r_cap:g}")
    if hi > 0.9 * grid.R:
        raise ValidationError(f"annulus must stay clear of the boundary band: hi={hi} > 0.9 R")
    x = grid.x
    sel = (x >= lo) & (x <= hi)
    if not sel.any():
        raise ValidationError(f"annulus {annulus} holds no nodes")
    return sel


def certify_barrier(cf: ClosedForm, params: Params, grid: Grid, annulus, sign: str,
                    tol: float = 0.0, delta: float = 0.0, closure: Optional[TailClosure] = None,
                    r_cap: Optional[float] = None, cap: str = "value") -> BarrierReport:
    """Verdict on E = L_h G - beta d/dy (y G) over x in annulus.

    ``super`` holds when E >= -tol G there, ``sub`` when E <= tol G, so tol
    is relative to the barrier value.
    """
    if sign not in ("super", "sub"):
        raise ValidationError(f"sign must be super or sub, got {sign!r}")
    if params.N != 1:
        raise ValidationError("certification runs on the one-dimensional grid (N=1)")
    _, beta = derive_exponents(params).require_self_similar()
    r_cap = grid.h if r_cap is None else r_cap
    sel = _annulus_mask(grid, annulus, r_cap)
    G = discretize(cf, grid, 0.0, r_cap, cap, params.p)
    tc = closure or PowerTail(cf.tail_exponent)
    E = stationary_residual(G, build_weights(grid, params.s, params.p), Nonlinearity(params.p, delta), tc, beta)
    e = E.values[sel]
    rel = e / G.values[sel]
    ok = bool(np.all(rel >= -tol)) if sign == "super" else bool(np.all(rel <= tol))
    return BarrierReport(cf.name, sign, tuple(annulus), float(e.min()), float(e.max()),
                         float(rel.min()), float(rel.max()), tol, ok)


def evolution_residual(cf: ClosedForm, params: Params, grid: Grid, t: float, annulus,
                       dt: Optional[float] = None, delta: float = 0.0,
                       closure: Optional[TailClosure] = None, r_cap: Optional[float] = None,
                       cap: str = "value") -> np.ndarray:
    """(U(t+dt) - U(t))/dt + L_h U(t) divided by U(t), on the annulus."""
    r_cap = grid.h if r_cap is None else r_cap
    sel = _annulus_mask(grid, annulus, r_cap)
    U0 = discretize(cf, grid, t, r_cap, cap, params.p)
    dt = 1e-6 * max(abs(t), 1.0) if dt is None else dt
    U1 = discretize(cf, grid, t + dt, r_cap, cap, params.p)
    op = DiscreteOperator(grid, params, Nonlinearity(params.p, delta), closure or PowerTail(cf.tail_exponent))
    LU = op.apply_even(U0.half())
    full = np.concatenate([LU[:0:-1], LU])
    res = (U1.values - U0.values) / dt + full
    return res[sel] / U0.values[sel]


def elliptic_residual(cf: ClosedForm, params: Params, grid: Grid, annulus, delta: float = 0.0,
                      closure: Optional[TailClosure] = None, r_cap: Optional[float] = None,
                      cap: str = "value") -> np.ndarray:
    """L_h G / G on the annulus (time independent forms)."""
    r_cap = grid.h if r_cap is None else r_cap
    sel = _annulus_mask(grid, annulus, r_cap)
    G = discretize(cf, grid, 0.0, r_cap, cap, params.p)
    op = DiscreteOperator(grid, params, Nonlinearity(params.p, delta), closure or PowerTail(cf.tail_exponent))
    LG = op.apply_even(G.half())
    full = np.concatenate([LG[:0:-1], LG])
    return full[sel] / G.values[sel]
