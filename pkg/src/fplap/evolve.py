"""Explicit Euler semigroup for u_t = -L u with a monotone time step."""
from __future__ import annotations

import csv
import io
import time as _time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .diagnostics import gagliardo_energy
from .errors import NumericalError, ValidationError
from .grid_field import Field, Grid
from .nonlinearity import Nonlinearity
from .operator import DiscreteOperator, KernelWeights, PowerTail, TailClosure
from .params import Params


def stable_dt(w: KernelWeights, nl: Nonlinearity, dt_safety: float = 1.0) -> float:
    """Largest step keeping u - dt L_h u order preserving, times dt_safety.

    dt = dt_safety / (Lip(phi_reg) * W_total), Lip(phi_reg) = delta^(p-2).
    """
    if nl.delta <= 0:
        raise ValidationError("explicit stepping needs delta > 0")
    if not (0 < dt_safety <= 1):
        raise ValidationError(f"dt_safety must lie in (0,1], got {dt_safety!r}")
    return dt_safety / (nl.lipschitz * w.total)


@dataclass
class EvolveConfig:
    params: Params
    grid: Grid
    t_end: float
    delta: Optional[float] = None  # None -> grid spacing h
    closure: TailClosure = field(default_factory=PowerTail)
    dt_safety: float = 0.9
    snapshot_times: Sequence[float] = ()
    extinction_threshold: float = 1e-3
    energy_every: int = 0  # 0 disables the energy column
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.t_end > 0):
            raise ValidationError(f"t_end must be > 0, got {self.t_end!r}")
        if not (0 < self.dt_safety <= 1):
            raise ValidationError(f"dt_safety must lie in (0,1], got {self.dt_safety!r}")
        st = list(self.snapshot_times)
        if any(b <= a for a, b in zip(st, st[1:])) or any(t < 0 for t in st):
            raise ValidationError("snapshot_times must be sorted, distinct and >= 0")
        if self.delta is not None and not (self.delta > 0):
            raise ValidationError("delta must be > 0 for explicit stepping")
        if not (0 <= self.extinction_threshold < 1):
            raise ValidationError("extinction_threshold must lie in [0,1)")

    def nonlinearity(self) -> Nonlinearity:
        return Nonlinearity(self.params.p, self.grid.h if self.delta is None else self.delta)

    def operator(self) -> DiscreteOperator:
        return DiscreteOperator(self.grid, self.params, self.nonlinearity(), self.closure)


@dataclass
class Trajectory:
    t: np.ndarray
    mass: np.ndarray  # domain mass plus the closure's exterior mass
    domain_mass: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    energy: np.ndarray
    bc_max: np.ndarray
    snapshots: List[Field]
    extinction_time: Optional[float]
    dt: float
    steps: int
    wall_time: float
    threshold: float = 1e-3
    final: Optional[Field] = None

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "mass", "l1", "l2", "linf", "energy", "bc_max"])
        for row in zip(self.t, self.mass, self.l1, self.l2, self.linf, self.energy, self.bc_max):
            w.writerow([f"{v:.12e}" for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


class _Stepper:
    """Even fields advance on the x >= 0 half, others on the full grid."""

    def __init__(self, op: DiscreteOperator, u0: Field):
        self.op = op
        self.grid = u0.grid
        self.even = u0.is_even()
        self.u = u0.half() if self.even else np.array(u0.values)

    def L(self, u):
        return self.op.apply_even(u) if self.even else self.op.apply(u)

    def full(self, u=None):
        u = self.u if u is None else u
        if self.even:
            return np.concatenate([u[:0:-1], u])
        return u

    def exterior_mass(self, u=None):
        u = self.u if u is None else u
        return self.op.exterior_mass_even(u) if self.even else self.op.exterior_mass(u)


def step(u: Field, dt: float, op: DiscreteOperator) -> Field:
    dt_max = stable_dt(op.w, op.nl, 1.0)
    if dt > dt_max * (1 + 1e-12):
        raise ValidationError(f"dt={dt:.3e} exceeds the monotone bound {dt_max:.3e}")
    st = _Stepper(op, u)
    new = st.u - dt * st.L(st.u)
    return Field(u.grid, st.full(new), u.time + dt)


def _scalars(grid: Grid, full: np.ndarray):
    h = grid.h
    a = np.abs(full)
    return (float(np.trapezoid(full, dx=h)), float(np.trapezoid(a, dx=h)),
            float(np.sqrt(np.trapezoid(a * a, dx=h))), float(a.max()))


def run(cfg: EvolveConfig, u0: Field, op: Optional[DiscreteOperator] = None) -> Trajectory:
    if u0.grid != cfg.grid:
        raise ValidationError("initial field lives on a different grid")
    op = op or cfg.operator()
    dt = stable_dt(op.w, op.nl, cfg.dt_safety)
    p, s = cfg.params.p, cfg.params.s
    st = _Stepper(op, u0)
    t = float(u0.time)
    start = _time.perf_counter()
    snaps_left = [ts for ts in cfg.snapshot_times if ts >= t]
    snapshots: List[Field] = []
    rows = []

    def record(u, tt, bc, k):
        full = st.full(u)
        dm, l1, l2, li = _scalars(cfg.grid, full)
        en = np.nan
        if cfg.energy_every and k % cfg.energy_every == 0:
            en = gagliardo_energy(Field(cfg.grid, full), s, p, op.w)
        rows.append((tt, dm + st.exterior_mass(u), dm, l1, l2, li, en, bc))

    record(st.u, t, np.nan, 0)
    if snaps_left and abs(snaps_left[0] - t) <= 1e-12 * max(1.0, t):
        snapshots.append(Field(cfg.grid, st.full(), t))
        snaps_left.pop(0)
    m0 = rows[0][1]
    ext = t if m0 <= 0.0 else None
    k = 0
    while ext is None and t < cfg.t_end * (1 - 1e-14):
        if k >= cfg.max_steps:
            raise NumericalError(f"step budget {cfg.max_steps} exhausted at t={t:.6g}")
        target = cfg.t_end
        if snaps_left:
            target = min(target, snaps_left[0])
        h_t = min(dt, target - t)
        Lu = st.L(st.u)
        new = st.u - h_t * Lu
        if not np.all(np.isfinite(new)):
            bad = int(np.flatnonzero(~np.isfinite(new))[0])
            raise NumericalError(f"instability: non-finite value at node {bad}, t={t:.6g}", index=bad)
        tm = t + 0.5 * h_t
        bc = float(np.max((2.0 - p) * tm * (-Lu) - 0.5 * (st.u + new)))
        st.u = new
        t = t + h_t if target - t > h_t * (1 + 1e-12) else target
        k += 1
        record(st.u, t, bc, k)
        if snaps_left and t >= snaps_left[0] * (1 - 1e-14):
            snapshots.append(Field(cfg.grid, st.full(), t))
            snaps_left.pop(0)
        if cfg.extinction_threshold > 0 and rows[-1][1] < cfg.extinction_threshold * m0:
            ext = t
    cols = list(zip(*rows))
    arr = [np.array(c, dtype=float) for c in cols]
    return Trajectory(arr[0], arr[1], arr[2], arr[3], arr[4], arr[5], arr[6], arr[7],
                      snapshots, ext, dt, k, _time.perf_counter() - start,
                      cfg.extinction_threshold, Field(cfg.grid, st.full(), t))


def detect_extinction(traj: Trajectory, threshold: Optional[float] = None) -> Optional[float]:
    thr = traj.threshold if threshold is None else threshold
    m0 = traj.mass[0]
    if m0 <= 0:
        return float(traj.t[0])
    below = np.flatnonzero(traj.mass < thr * m0)
    return float(traj.t[below[0]]) if below.size else None

