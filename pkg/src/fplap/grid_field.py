"""Uniform symmetric 1D grids, sampled fields, norms and the scaling group."""
from __future__ import annotations

import io
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .params import Params


@dataclass(frozen=True)
class Grid:
    R: float
    n: int

    def __post_init__(self):
        if not (self.R > 0) or not np.isfinite(self.R):
            raise ValidationError(f"R must be positive, got {self.R!r}")
        if int(self.n) != self.n or self.n < 3 or self.n % 2 == 0:
            raise ValidationError(f"n must be an odd integer >= 3, got {self.n!r}")
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 2.0 * self.R / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        x = -self.R + self.h * np.arange(self.n)
        x[self.mid] = 0.0
        return x

    @property
    def mid(self) -> int:
        return (self.n - 1) // 2

    @property
    def x_half(self) -> np.ndarray:
        """Nodes with x >= 0, starting at the origin."""
        return self.h * np.arange(self.mid + 1)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValidationError(f"values have shape {v.shape}, grid needs ({self.grid.n},)")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValidationError(f"non-finite value at node {bad}")
        if not np.isfinite(self.time):
            raise ValidationError(f"time must be finite, got {self.time!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: Grid, f, time: float = 0.0) -> "Field":
        return cls(grid, f(grid.x), time)

    @classmethod
    def from_half(cls, grid: Grid, half: np.ndarray, time: float = 0.0) -> "Field":
        """Even field from its values on x >= 0."""
        half = np.asarray(half, dtype=float)
        return cls(grid, np.concatenate([half[:0:-1], half]), time)

    def half(self) -> np.ndarray:
        return np.array(self.values[self.grid.mid:])

    def is_even(self, rtol: float = 0.0) -> bool:
        v = self.values
        scale = max(np.max(np.abs(v)), 1e-300)
        return bool(np.max(np.abs(v - v[::-1])) <= rtol * scale)

    def with_values(self, values, time: Optional[float] = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)


def mass(field: Field) -> float:
    return float(np.trapezoid(field.values, dx=field.grid.h))


def lq_norm(field: Field, q: float) -> float:
    if q == np.inf:
        return float(np.max(np.abs(field.values)))
    if not (q >= 1):
        raise ValidationError(f"q must be >= 1 or inf, got {q!r}")
    return float(np.trapezoid(np.abs(field.values) ** q, dx=field.grid.h) ** (1.0 / q))


def resample(field: Field, xq: np.ndarray, closure=None) -> np.ndarray:
    """Linear interpolation of ``field`` at ``xq``.

    Points outside [-R, R] are filled by ``closure.extend(field, xq)`` if a
    closure is given, else by zero.
    """
    g = field.grid
    xq = np.asarray(xq, dtype=float)
    out = np.interp(xq, g.x, field.values)
    outside = np.abs(xq) > g.R
    if np.any(outside):
        if closure is None:
            out[outside] = 0.0
        else:
            out[outside] = closure.extend(field, xq[outside])
    return out


@dataclass(frozen=True)
class ScaledField:
    field: Field
    time_factor: float
    mass_before: float
    mass_after: float


def apply_scaling(field: Field, kind: str, factor: float, params: Params, closure=None) -> ScaledField:
    """Apply one of the three scaling transformations to a sampled field.

    Tk: k^N u(k x), time multiplier k^(N(p-2)+sp).
    TM: M u(x), time multiplier M^(p-2).
    Th: h^gamma u(h x), time unchanged.
    A solution at time t maps to a solution at time t / time_factor.
    """
    if not (factor > 0) or not np.isfinite(factor):
        raise ValidationError(f"scaling factor must be positive, got {factor!r}")
    N, s, p = params.N, params.s, params.p
    x = field.grid.x
    if kind == "Tk":
        vals = factor**N * resample(field, factor * x, closure)
        tf = factor ** (N * (p - 2.0) + s * p)
    elif kind == "TM":
        vals = factor * np.array(field.values)
        tf = factor ** (p - 2.0)
    elif kind == "Th":
        gamma = s * p / (2.0 - p)
        vals = factor**gamma * resample(field, factor * x, closure)
        tf = 1.0
    else:
        raise ValidationError(f"unknown scaling kind {kind!r}; expected Tk, TM or Th")
    new = Field(field.grid, vals, field.time / tf)
    return ScaledField(new, tf, mass(field), mass(new))


def field_to_csv(field: Field, path=None, xname: str = "x", uname: str = "u") -> str:
    buf = io.StringIO()
    buf.write(f"{xname},{uname}\n")
    for xi, ui in zip(field.grid.x, field.values):
        buf.write(f"{xi:.12e},{ui:.17e}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def field_from_csv(path, time: float = 0.0) -> Field:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    x, u = data[:, 0], data[:, 1]
    n = len(x)
    if n < 3 or n % 2 == 0:
        raise ValidationError(f"{path}: need an odd number >= 3 of rows, got {n}")
    R = float(x[-1])
    grid = Grid(R, n)
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * R):
        raise ValidationError(f"{path}: nodes are not a uniform symmetric grid")
    return Field(grid, u, time)
