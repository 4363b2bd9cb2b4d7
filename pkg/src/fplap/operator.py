"""Discrete fractional p-Laplacian on a uniform 1D grid.

The interior sum uses cell-integrated kernel weights omega_j over
((j-1/2)h, (j+1/2)h); the diagonal cell is dropped and +-j offsets are
paired, which realises the principal value.  Beyond [-R, R] the integral
is closed by a tail model sampled on log-spaced exterior cells that reach
far out (1e6 R by default), each carrying its exact kernel integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from .errors import NumericalError, ValidationError
from .grid_field import Field, Grid
from .nonlinearity import Nonlinearity
from .params import Params, decay_exponent


def cell_weights(h: float, s: float, p: float, J: int) -> np.ndarray:
    """omega_j = integral of z^-(1+sp) over the cell of offset j, j=1..J."""
    sp = s * p
    j = np.arange(1, J + 1, dtype=float)
    return (((j - 0.5) * h) ** (-sp) - ((j + 0.5) * h) ** (-sp)) / sp


@dataclass(frozen=True, eq=False)
class KernelWeights:
    h: float
    s: float
    p: float
    omega: np.ndarray
    omega_tail: float

    @property
    def sp(self) -> float:
        return self.s * self.p

    @property
    def total(self) -> float:
        """Two-sided total weight, 2 (sum omega_j + omega_tail)."""
        return 2.0 * (float(np.sum(self.omega)) + self.omega_tail)

    @staticmethod
    def exact_total(h: float, s: float, p: float) -> float:
        return (2.0 / (s * p)) * (h / 2.0) ** (-s * p)


def build_weights(grid: Grid, s: float, p: float) -> KernelWeights:
    if not (0 < s * p < 2):
        raise ValidationError("need 0 < sp < 2")
    J = grid.n - 1
    h = grid.h
    om = cell_weights(h, s, p, J)
    om.setflags(write=False)
    tail = ((J + 0.5) * h) ** (-s * p) / (s * p)
    return KernelWeights(h, s, p, om, tail)


# ------------------------------------------------------------ closures ---

@dataclass(frozen=True)
class FittedTail:
    """Closure fitted to one side of a field: value(r) for r > R."""

    kind: str
    R: float
    A: float = 0.0
    q: float = 0.0
    boundary: float = 0.0

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return self.A * r ** (-self.q)
        if self.kind == "frozen":
            return np.full_like(r, self.boundary)
        return np.zeros_like(r)

    def mass(self) -> float:
        """Mass on (R, inf).  Only the power tail is counted: the frozen
        tail has infinite mass and is reported as 0."""
        if self.kind == "power" and self.A > 0:
            if self.q <= 1.0:
                return np.inf
            return self.A * self.R ** (1.0 - self.q) / (self.q - 1.0)
        return 0.0


class TailClosure:
    kind = "zero"

    def fit(self, r: np.ndarray, u: np.ndarray, R: float) -> FittedTail:
        raise NotImplementedError

    def resolved(self, params: Params) -> "TailClosure":
        return self

    def extend(self, field: Field, xq: np.ndarray) -> np.ndarray:
        """Values of the closure at points |xq| > R (used for resampling)."""
        g = field.grid
        xq = np.asarray(xq, dtype=float)
        m = g.mid
        right = self.fit(g.x[m:], field.values[m:], g.R)
        left = self.fit(-g.x[m::-1], field.values[m::-1], g.R)
        return np.where(xq > 0, right.value(np.abs(xq)), left.value(np.abs(xq)))

    def describe(self) -> str:
        return self.kind


class ZeroTail(TailClosure):
    kind = "zero"

    def fit(self, r, u, R):
        return FittedTail("zero", R)


class FrozenTail(TailClosure):
    kind = "frozen"

    def fit(self, r, u, R):
        return FittedTail("frozen", R, boundary=float(u[-1]))


class PowerTail(TailClosure):
    """A r^-q beyond R with q fixed and A fitted in log-log space.

    With the slope fixed, the least-squares intercept is the mean of
    log u + q log r over the outermost ``fraction`` of the half-line nodes
    (at least ``min_nodes``).  Any nonpositive value there gives A = 0.
    """

    kind = "power"

    def __init__(self, q: Optional[float] = None, fraction: float = 0.1, min_nodes: int = 10):
        if q is not None and not (q > 0):
            raise ValidationError(f"power tail exponent must be positive, got {q!r}")
        self.q = q
        self.fraction = fraction
        self.min_nodes = min_nodes

    def resolved(self, params: Params) -> "PowerTail":
        if self.q is not None:
            return self
        return PowerTail(decay_exponent(params), self.fraction, self.min_nodes)

    def fit(self, r, u, R):
        if self.q is None:
            raise ValidationError("PowerTail exponent unresolved; call resolved(params)")
        k = min(len(r) - 1, max(int(self.fraction * len(r)), self.min_nodes))
        rr = np.asarray(r[-k:], dtype=float)
        uu = np.asarray(u[-k:], dtype=float)
        if np.any(uu <= 0) or np.any(rr <= 0):
            return FittedTail("power", R, 0.0, self.q)
        A = float(np.exp(np.mean(np.log(uu) + self.q * np.log(rr))))
        return FittedTail("power", R, A, self.q)

    def describe(self) -> str:
        return f"power(q={self.q})" if self.q is not None else "power"


def make_closure(name: str, q: Optional[float] = None) -> TailClosure:
    name = name.lower()
    if name == "zero":
        return ZeroTail()
    if name == "frozen":
        return FrozenTail()
    if name in ("power", "powertail"):
        return PowerTail(q)
    raise ValidationError(f"unknown tail closure {name!r}; expected zero, frozen or power")


# ------------------------------------------------------ exterior cells ---

def exterior_edges(R: float, h: float, ratio: float = 1.05, reach: float = 1e6) -> np.ndarray:
    """Cell edges from R+h/2 outward: first width h, each next one ``ratio``
    times wider, until ``reach * R``."""
    edges = [R + 0.5 * h]
    d = h
    while edges[-1] < reach * R:
        edges.append(edges[-1] + d)
        d *= ratio
    return np.array(edges)


def exterior_weights(x: np.ndarray, edges: np.ndarray, sp: float, both_sides: bool):
    """Kernel integrals of exterior cells seen from nodes x.

    Returns (W, tw): W[i, l] integrates |x_i - y|^-(1+sp) over right cell l
    (plus the mirrored left cell when ``both_sides``); tw covers y beyond
    the last edge.
    """
    x = np.asarray(x, dtype=float)[:, None]
    a = edges[None, :] - x
    Fa = a ** (-sp) / sp
    W = Fa[:, :-1] - Fa[:, 1:]
    tw = Fa[:, -1].copy()
    if both_sides:
        b = edges[None, :] + x
        Fb = b ** (-sp) / sp
        W += Fb[:, :-1] - Fb[:, 1:]
        tw += Fb[:, -1]
    return W, tw


class DiscreteOperator:
    """Precomputed discrete operator for one (grid, s, p, closure).

    ``apply`` handles arbitrary fields; ``apply_even`` takes the x >= 0 half
    of an even field and costs about a quarter as much.
    """

    def __init__(self, grid: Grid, params: Params, nl: Nonlinearity, closure: TailClosure,
                 ext_ratio: float = 1.05, ext_reach: float = 1e6):
        if abs(nl.p - params.p) > 0:
            raise ValidationError("nonlinearity p differs from params p")
        self.grid = grid
        self.params = params
        self.nl = nl
        self.closure = closure.resolved(params)
        self.w = build_weights(grid, params.s, params.p)
        self.edges = exterior_edges(grid.R, grid.h, ext_ratio, ext_reach)
        self.mids = np.sqrt(self.edges[:-1] * self.edges[1:])
        self._even_cache = None
        self._gen_cache = None

    # lazily built exterior weight tables
    def _even_tables(self):
        if self._even_cache is None:
            self._even_cache = exterior_weights(self.grid.x_half, self.edges, self.params.sp, True)
        return self._even_cache

    def _gen_tables(self):
        if self._gen_cache is None:
            self._gen_cache = exterior_weights(self.grid.x, self.edges, self.params.sp, False)
        return self._gen_cache

    def with_delta(self, delta: float) -> "DiscreteOperator":
        new = object.__new__(DiscreteOperator)
        new.__dict__.update(self.__dict__)
        new.nl = Nonlinearity(self.nl.p, delta)
        return new

    @property
    def delta(self) -> float:
        return self.nl.delta

    def fit_half(self, half: np.ndarray) -> FittedTail:
        return self.closure.fit(self.grid.x_half, half, self.grid.R)

    def fit_sides(self, u: np.ndarray):
        g = self.grid
        m = g.mid
        right = self.closure.fit(g.x[m:], u[m:], g.R)
        left = self.closure.fit(-g.x[m::-1], u[m::-1], g.R)
        return left, right

    def apply_even(self, half: np.ndarray) -> np.ndarray:
        half = np.ascontiguousarray(half, dtype=float)
        W, tw = self._even_tables()
        tail = self.fit_half(half)
        v = tail.value(self.mids)
        vfar = float(tail.value(self.edges[-1:])[0])
        out = _kernels.even_apply(half, self.w.omega, W, v, vfar, tw, self.params.p, self.nl.delta)
        _check_finite(out, offset=self.grid.mid)
        return out

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.ascontiguousarray(u, dtype=float)
        W, tw = self._gen_tables()
        left, right = self.fit_sides(u)
        vR = right.value(self.mids)
        vL = left.value(self.mids)
        e = self.edges[-1:]
        out = _kernels.general_apply(u, self.w.omega, W, vR, right.value(e)[0], vL,
                                     left.value(e)[0], tw, self.params.p, self.nl.delta)
        _check_finite(out)
        return out

    def apply_node(self, u: np.ndarray, i: int) -> float:
        """Operator at a single node in O(n); no O(n * cells) tables."""
        g = self.grid
        u = np.asarray(u, dtype=float)
        left, right = self.fit_sides(u)
        xi = g.x[i : i + 1]
        Wr, twr = exterior_weights(xi, self.edges, self.params.sp, False)
        Wl, twl = exterior_weights(-xi, self.edges, self.params.sp, False)
        e = self.edges[-1:]
        wext = np.concatenate([Wr[0], Wl[0]])
        vext = np.concatenate([right.value(self.mids), left.value(self.mids)])
        tw = np.array([twr[0], twl[0]])
        vfar = np.array([right.value(e)[0], left.value(e)[0]])
        val = _kernels.node_apply_np(u, i, self.w.omega, wext, vext, tw, vfar, self.params.p, self.nl.delta)
        if not np.isfinite(val):
            raise NumericalError(f"non-finite operator value at node {i}", index=i)
        return val

    def exterior_mass(self, u: np.ndarray) -> float:
        left, right = self.fit_sides(u)
        return left.mass() + right.mass()

    def exterior_mass_even(self, half: np.ndarray) -> float:
        return 2.0 * self.fit_half(half).mass()


def _check_finite(out, offset: int = 0):
    if not np.all(np.isfinite(out)):
        bad = int(np.flatnonzero(~np.isfinite(out))[0]) + offset
        raise NumericalError(f"non-finite operator value at node {bad}", index=bad)


@lru_cache(maxsize=16)
def _cached_operator(grid: Grid, N: int, s: float, p: float, delta: float, closure_key: tuple):
    closure = _closure_from_key(closure_key)
    return DiscreteOperator(grid, Params(N, s, p), Nonlinearity(p, delta), closure)


def _closure_key(tc: TailClosure) -> tuple:
    if isinstance(tc, PowerTail):
        return ("power", tc.q, tc.fraction, tc.min_nodes)
    return (tc.kind,)


def _closure_from_key(key: tuple) -> TailClosure:
    if key[0] == "power":
        return PowerTail(key[1], key[2], key[3])
    return make_closure(key[0])


def get_operator(grid: Grid, params: Params, nl: Nonlinearity, tc: TailClosure) -> DiscreteOperator:
    return _cached_operator(grid, params.N, params.s, params.p, nl.delta, _closure_key(tc))


def apply_op(field: Field, w: KernelWeights, nl: Nonlinearity, tc: TailClosure, N: int = 1) -> Field:
    """(L_h u)(x_i) on every node; even fields take the folded fast path."""
    if w.h != field.grid.h:
        raise ValidationError("weights were built for a different grid")
    op = get_operator(field.grid, Params(N, w.s, w.p), nl, tc)
    if field.is_even():
        half = op.apply_even(field.half())
        return Field.from_half(field.grid, half, field.time)
    return Field(field.grid, op.apply(field.values), field.time)


def stationary_residual(v: Field, w: KernelWeights, nl: Nonlinearity, tc: TailClosure, beta: float) -> Field:
    """E(v) = L_h v - beta d/dx (x v), centred differences (one-sided at
    the two end nodes).  E >= 0 marks a supersolution of the profile
    equation, E <= 0 a subsolution."""
    Lv = apply_op(v, w, nl, tc).values
    xv = v.grid.x * v.values
    d = np.gradient(xv, v.grid.h)
    return Field(v.grid, Lv - beta * d, v.time)
