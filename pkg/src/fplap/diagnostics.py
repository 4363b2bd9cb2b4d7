"""Measurements shared by tests and the CLI: tail slopes, energy, Harnack
ratios, positivity and lower-bound probes."""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import stats

from . import _kernels
from .errors import ValidationError
from .grid_field import Field


@dataclass(frozen=True)
class TailFit:
    r_lo: float
    r_hi: float
    slope: float
    intercept: float
    r2: float
    nodes: int

    def as_dict(self):
        return asdict(self)


def tail_slope(profile: Field, window: Tuple[float, float]) -> TailFit:
    """Least-squares slope of log F against log r on the window (x > 0)."""
    lo, hi = window
    R = profile.grid.R
    if not (0 < lo < hi <= 0.9 * R + 1e-12):
        raise ValidationError(f"window {window} must satisfy 0 < lo < hi <= 0.9 R = {0.9 * R:g}")
    x = profile.grid.x
    sel = (x >= lo) & (x <= hi)
    if sel.sum() < 10:
        raise ValidationError(f"window {window} holds {sel.sum()} nodes, need at least 10")
    F = profile.values[sel]
    if np.any(F <= 0):
        raise ValidationError("tail_slope needs strictly positive values on the window")
    fit = stats.linregress(np.log(x[sel]), np.log(F))
    return TailFit(lo, hi, float(fit.slope), float(fit.intercept), float(fit.rvalue**2), int(sel.sum()))


def gagliardo_energy(field: Field, s: float, p: float, w=None) -> float:
    """(h/p) sum over pairs i<j of |u_i - u_j|^p omega_{j-i}.

    Only pairs inside the grid count, so this is a lower bound for the
    energy of the untruncated function.
    """
    if w is None:
        from .operator import build_weights

        w = build_weights(field.grid, s, p)
    return _kernels.energy(np.ascontiguousarray(field.values), w.omega, p, field.grid.h)


def selfsimilar_solution(profile: Field, alpha: float, beta: float) -> Callable[[np.ndarray, float], np.ndarray]:
    """U(x,t) = t^-alpha F(|x| t^-beta) from a sampled even profile F."""
    y = profile.grid.x_half
    F = profile.half()

    def U(x, t):
        r = np.abs(np.asarray(x, dtype=float)) * t ** (-beta)
        return t ** (-alpha) * np.interp(r, y, F, right=np.nan)

    return U


def harnack_ratio(u: Field, t: float, profile: Field, alpha: float, beta: float,
                  floor: float = 1e-12) -> Tuple[float, float]:
    """Extremes of u / U_M over nodes where U_M exceeds floor * max U_M.

    Nodes whose rescaled coordinate falls outside the profile grid are left
    out, as is a boundary band of width 0.1 R.
    """
    if t < 1:
        raise ValidationError("harnack_ratio is normalised for t >= 1")
    U = selfsimilar_solution(profile, alpha, beta)(u.grid.x, t)
    x = u.grid.x
    ok = np.isfinite(U) & (np.abs(x) <= 0.9 * u.grid.R)
    if not ok.any():
        raise ValidationError("empty comparison set")
    ok &= U > floor * np.nanmax(U[ok])
    if not ok.any():
        raise ValidationError("empty comparison set")
    ratio = u.values[ok] / U[ok]
    return float(ratio.min()), float(ratio.max())


def positivity_probe(fields, ball_radius: float) -> float:
    """Minimum of the fields over |x| <= ball_radius.  Accepts a trajectory
    (its snapshots are used) or any iterable of fields."""
    fs = getattr(fields, "snapshots", fields)
    best = np.inf
    for f in fs:
        sel = np.abs(f.grid.x) <= ball_radius
        best = min(best, float(f.values[sel].min()))
    if best == np.inf:
        raise ValidationError("no fields to probe")
    return best


def plateau(profile: Field, exponent: float, window: Tuple[float, float]) -> np.ndarray:
    """r^exponent F(r) on the window (x > 0)."""
    x = profile.grid.x
    sel = (x >= window[0]) & (x <= window[1])
    return x[sel] ** exponent * profile.values[sel]


def delayed_lower_mass(u_later: Field, U_of_mass: Callable[[float], np.ndarray],
                       m_hi: float, iters: int = 50, band: float = 0.1) -> float:
    """Largest M_d in (0, m_hi] with u_later >= U_{M_d} on all nodes away
    from the boundary band; bisection on the mass.  ``U_of_mass(M)`` returns
    the comparison field on u_later's nodes."""
    x = u_later.grid.x
    sel = np.abs(x) <= (1 - band) * u_later.grid.R

    def ok(M):
        return bool(np.all(u_later.values[sel] >= U_of_mass(M)[sel]))

    if ok(m_hi):
        return m_hi
    lo, hi = 0.0, m_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def tail_lower_constant(u: Field, t: float, exponent: float, r_min: float = 2.0, band: float = 0.1) -> float:
    """min over r_min <= |x| <= (1-band) R of u |x|^exponent / t."""
    x = u.grid.x
    sel = (np.abs(x) >= r_min) & (np.abs(x) <= (1 - band) * u.grid.R)
    return float(np.min(u.values[sel] * np.abs(x[sel]) ** exponent / t))
