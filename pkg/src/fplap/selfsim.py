"""Self-similar variables, the rescaled flow with drift, and extraction of
the profile F_M of the fundamental solution U_M(x,t) = t^-alpha F(x t^-beta).

Profile extraction follows the direct solver in a zooming frame.  Between
two compressions the field is advanced on an effective-age clock
theta = alpha u(0) / (L u)(0), which equals t exactly on a self-similar
solution.  When theta has grown by 2^(1/beta) the grid is compressed 2:1,
u(x) -> 2 u(2x), which is the exact scaling symmetry that maps the solution
at theta 2^(1/beta) back to age theta.  Consecutive compressed fields are
therefore rescaled snapshots at geometrically spaced times, and their sup
distance measures convergence to the self-similar profile.
"""
from __future__ import annotations

import json
import math
import time as _time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .diagnostics import tail_slope
from .errors import NumericalError, ValidationError
from .evolve import EvolveConfig, Trajectory, run as evolve_run, stable_dt
from .grid_field import Field, Grid, mass, resample
from .nonlinearity import Nonlinearity
from .operator import DiscreteOperator, PowerTail, TailClosure
from .params import Exponents, Params, classify_regime, decay_exponent, derive_exponents


def to_selfsim(u: Field, t: float, exps: Exponents, a: float = 0.0,
               closure: Optional[TailClosure] = None) -> Field:
    """v(y) = (t+a)^alpha u(y (t+a)^beta) on u's grid; v.time = log(t+a)."""
    alpha, beta = exps.require_self_similar()
    T = t + a
    if not (T > 0):
        raise ValidationError(f"t + a must be > 0, got {T!r}")
    y = u.grid.x
    vals = T**alpha * resample(u, y * T**beta, closure)
    return Field(u.grid, vals, math.log(T))


def from_selfsim(v: Field, t: float, exps: Exponents, closure: Optional[TailClosure] = None) -> Field:
    """Inverse of to_selfsim with a = 0."""
    alpha, beta = exps.require_self_similar()
    x = v.grid.x
    return Field(v.grid, t ** (-alpha) * resample(v, x * t ** (-beta), closure), t)


# ------------------------------------------------------------ rescaled flow

@dataclass
class RescaledConfig:
    params: Params
    grid: Grid
    tau_end: float
    delta: Optional[float] = None  # None -> h
    closure: TailClosure = field(default_factory=PowerTail)
    dt_safety: float = 0.9
    snapshot_times: Sequence[float] = ()
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.tau_end > 0):
            raise ValidationError(f"tau_end must be > 0, got {self.tau_end!r}")
        if not (0 < self.dt_safety <= 1):
            raise ValidationError(f"dt_safety must lie in (0,1], got {self.dt_safety!r}")
        if self.delta is not None and not (self.delta > 0):
            raise ValidationError("delta must be > 0 for explicit stepping")
        derive_exponents(self.params).require_self_similar()


def drift_term(v: np.ndarray, x: np.ndarray, h: float, beta: float, v_out: float) -> np.ndarray:
    """Upwind beta d/dy (y v) for the inward velocity -beta y.

    Conservative fluxes at the cell faces take the value on the outer side;
    ``v_out`` is the closure value just beyond each end.
    """
    n = v.size
    m = (n - 1) // 2
    vp = np.empty(n + 2)
    vp[1:-1] = v
    vp[0] = vp[-1] = v_out
    yf = np.abs(x) + 0.5 * h  # |y| of the outer face
    yi = np.maximum(np.abs(x) - 0.5 * h, 0.0)  # |y| of the inner face
    out = np.empty(n)
    # right half: outer neighbour is i+1, inner face takes v_i
    r = np.arange(m, n)
    out[r] = (yf[r] * vp[r + 2] - yi[r] * vp[r + 1]) / h
    l = np.arange(0, m)
    out[l] = (yf[l] * vp[l] - yi[l] * vp[l + 1]) / h
    # the origin cell collects from both sides
    out[m] = 0.5 * (vp[m + 2] + vp[m])
    return beta * out


def rescaled_dt(op: DiscreteOperator, beta: float, dt_safety: float) -> float:
    g = op.grid
    bound = op.nl.lipschitz * op.w.total + beta * (g.R + 0.5 * g.h) / g.h
    return dt_safety / bound


def run_rescaled(cfg: RescaledConfig, v0: Field) -> Trajectory:
    """Explicit Euler for dv/dtau = -L_h v + beta D_h(y v)."""
    if v0.grid != cfg.grid:
        raise ValidationError("initial field lives on a different grid")
    ex = derive_exponents(cfg.params)
    beta = ex.beta
    g = cfg.grid
    nl = Nonlinearity(cfg.params.p, g.h if cfg.delta is None else cfg.delta)
    op = DiscreteOperator(g, cfg.params, nl, cfg.closure)
    dt = rescaled_dt(op, beta, cfg.dt_safety)
    x = g.x
    u = np.array(v0.values)
    tau = float(v0.time)
    t0 = tau
    start = _time.perf_counter()
    snaps_left = [ts for ts in cfg.snapshot_times if ts >= tau]
    snapshots: List[Field] = []
    rows = []

    def record(u, tt):
        a = np.abs(u)
        dm = float(np.trapezoid(u, dx=g.h))
        rows.append((tt, dm + op.exterior_mass(u), dm, float(np.trapezoid(a, dx=g.h)),
                     float(np.sqrt(np.trapezoid(a * a, dx=g.h))), float(a.max()), np.nan, np.nan))

    record(u, tau)
    k = 0
    end = t0 + cfg.tau_end
    while tau < end - 1e-14 * max(1.0, abs(end)):
        if k >= cfg.max_steps:
            raise NumericalError(f"step budget {cfg.max_steps} exhausted at tau={tau:.6g}")
        target = end
        if snaps_left:
            target = min(target, snaps_left[0])
        h_t = min(dt, target - tau)
        left, right = op.fit_sides(u)
        v_out = float(right.value(np.array([g.R + g.h]))[0])
        new = u + h_t * (drift_term(u, x, g.h, beta, v_out) - op.apply(u))
        if not np.all(np.isfinite(new)):
            bad = int(np.flatnonzero(~np.isfinite(new))[0])
            raise NumericalError(f"instability: non-finite value at node {bad}, tau={tau:.6g}", index=bad)
        u = new
        tau = tau + h_t if target - tau > h_t * (1 + 1e-12) else target
        k += 1
        record(u, tau)
        if snaps_left and tau >= snaps_left[0] - 1e-14 * max(1.0, abs(tau)):
            snapshots.append(Field(g, u, tau))
            snaps_left.pop(0)
    cols = [np.array(c, dtype=float) for c in zip(*rows)]
    return Trajectory(*cols, snapshots, None, dt, k, _time.perf_counter() - start, 0.0, Field(g, u, tau))


# ------------------------------------------------------------ profiles

@dataclass(frozen=True, eq=False)
class Profile:
    """Sampled profile F with U_M(x, 1) = F(x) and M its mass."""

    grid: Grid
    values: np.ndarray
    M: float
    params: Params
    convergence_report: dict

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise ValidationError("profile values do not match the grid")
        if np.any(v < 0):
            raise ValidationError("profile must be nonnegative")

    @property
    def regime(self):
        return classify_regime(self.params)

    @property
    def field(self) -> Field:
        return Field(self.grid, self.values, 1.0)

    def monotonicity_defect(self) -> float:
        """Largest increase of F along |y|, relative to max F."""
        h = self.field.half()
        return float(max(np.max(np.diff(h)), 0.0) / h.max())

    def evenness_defect(self) -> float:
        v = np.asarray(self.values)
        return float(np.max(np.abs(v - v[::-1])) / v.max())

    def at_mass(self, M: float, grid: Optional[Grid] = None) -> Field:
        """F_M from this F_{M0} via F_M(r) = mu^(sp beta) F_{M0}(mu^((2-p) beta) r), mu = M/M0.

        Cubic interpolation in r; beyond the grid the power-tail closure
        of the profile is used.
        """
        from scipy.interpolate import CubicSpline

        ex = derive_exponents(self.params)
        beta = ex.beta
        p, sp = self.params.p, self.params.sp
        mu = M / self.M
        g = grid or self.grid
        r = np.abs(g.x) * mu ** ((2 - p) * beta)
        half = self.field.half()
        cs = CubicSpline(self.grid.x_half, half, bc_type=((1, 0.0), "not-a-knot"))
        vals = np.empty_like(r)
        inside = r <= self.grid.R
        vals[inside] = cs(r[inside])
        if np.any(~inside):
            tail = PowerTail().resolved(self.params).fit(self.grid.x_half, half, self.grid.R)
            vals[~inside] = tail.value(r[~inside])
        return Field(g, mu ** (sp * beta) * vals, 1.0)


def profile_to_csv(profile: Profile, path=None) -> str:
    from .grid_field import field_to_csv

    return field_to_csv(profile.field, path, "y", "F")


@dataclass
class ProfileConfig:
    """Settings for extract_profile.

    method ``zoom``: compress 2:1 each time the effective age has grown by
    2^(1/beta); ``eps`` sets the regularisation delta = eps * max u, and
    after each compression the field is renormalised to the initial total
    mass (the exact mass-scaling symmetry) to stop drift from compounding.
    method ``direct``: evolve.run on the fixed grid with snapshots at
    t_first * 2^k up to t_end, rescaled by to_selfsim.
    """

    params: Params
    grid: Grid
    method: str = "zoom"
    tol: float = 1e-3
    eps: float = 1e-2
    dt_safety: float = 1.0
    min_cycles: int = 10
    max_cycles: int = 200
    renormalise: bool = True
    clock: str = "estimate"
    min_steps: int = 50  # Euler steps per compression cycle, at least
    t_first: float = 1e-2
    t_end: float = 10.0
    closure: Optional[TailClosure] = None

    def __post_init__(self):
        if self.clock not in ("estimate", "exact"):
            raise ValidationError(f"clock must be estimate or exact, got {self.clock!r}")
        if self.method not in ("zoom", "direct"):
            raise ValidationError(f"method must be zoom or direct, got {self.method!r}")
        if not (self.tol > 0):
            raise ValidationError("tol must be > 0")
        if not (0 < self.eps < 1):
            raise ValidationError("eps must lie in (0,1)")
        if not (0 < self.dt_safety <= 1):
            raise ValidationError("dt_safety must lie in (0,1]")
        if self.max_cycles < 3 or self.min_cycles < 2:
            raise ValidationError("need min_cycles >= 2 and max_cycles >= 3")
        if not (0 < self.t_first < self.t_end):
            raise ValidationError("need 0 < t_first < t_end")
        derive_exponents(self.params).require_self_similar()

    def tail_closure(self) -> TailClosure:
        return (self.closure or PowerTail()).resolved(self.params)


def _converged(dist: Sequence[float], tol: float) -> bool:
    return len(dist) >= 2 and dist[-1] <= tol and dist[-2] <= tol


def _tail_summary(profile_field: Field, params: Params) -> dict:
    R = profile_field.grid.R
    out = {}
    for lo, hi in ((0.05 * R, 0.5 * R), (R / 8, R / 2)):
        try:
            out[f"[{lo:g},{hi:g}]"] = tail_slope(profile_field, (lo, hi)).slope
        except ValidationError:
            pass
    return out


def _compress(half: np.ndarray, x_half: np.ndarray, tail) -> np.ndarray:
    m = half.size
    idx = 2 * np.arange(m)
    inside = idx < m
    new = np.empty(m)
    new[inside] = 2.0 * half[idx[inside]]
    new[~inside] = 2.0 * tail.value(2.0 * x_half[~inside])
    return new


def _extract_zoom(u0: Field, cfg: ProfileConfig, progress=None) -> Profile:
    if not u0.is_even(1e-12):
        raise ValidationError("zoom extraction needs even initial data")
    g = cfg.grid
    ex = derive_exponents(cfg.params)
    alpha, beta = ex.alpha, ex.beta
    p = cfg.params.p
    x = g.x_half
    half = u0.half()
    op = DiscreteOperator(g, cfg.params, Nonlinearity(p, cfg.eps * half.max()), cfg.tail_closure())

    def total_mass(w):
        return 2.0 * float(np.trapezoid(w, dx=g.h)) + op.exterior_mass_even(w)

    m0 = total_mass(half)
    if not (m0 > 0):
        raise ValidationError("initial data must have positive mass")

    def age(w, op):
        Lw0 = op.apply_even(w)[0]
        if not (Lw0 > 0):
            raise NumericalError("operator at the origin is not positive; data is not a bump")
        return alpha * w[0] / Lw0

    theta = age(half, op)
    phys = 0.0  # time of the physical run, before any renormalisation drift
    scale = 1.0  # (compression factor)^(1/beta) * (mass factor)^(p-2)
    dist: List[float] = []
    thetas: List[float] = []
    prev = None
    steps = 0
    start = _time.perf_counter()
    fac = 2.0 ** (1.0 / beta)
    for cycle in range(1, cfg.max_cycles + 1):
        target = theta * fac
        dt = min(stable_dt(op.w, op.nl, cfg.dt_safety), (target - theta) / cfg.min_steps)
        while theta < target * (1 - 1e-12):
            h_t = min(dt, target - theta)
            half = half - h_t * op.apply_even(half)
            theta += h_t
            phys += h_t * scale
            steps += 1
        half = _compress(half, x, op.fit_half(half))
        scale *= fac
        m_now = total_mass(half)
        if cfg.renormalise:
            mu = m0 / m_now
            half = half * mu
            scale *= mu ** (p - 2.0)
        op = op.with_delta(cfg.eps * half.max())
        est = age(half, op)
        theta = est if cfg.clock == "estimate" else theta / fac
        thetas.append(est)
        if prev is not None:
            dist.append(float(np.max(np.abs(half - prev)) / half.max()))
        prev = half.copy()
        if progress is not None:
            progress(dict(cycle=cycle, steps=steps, distance=dist[-1] if dist else np.nan,
                          theta=est, mass=m_now))
        if cycle >= cfg.min_cycles and _converged(dist, cfg.tol):
            break
    else:
        raise NumericalError(f"profile did not converge in {cfg.max_cycles} compressions "
                             f"(last distances {dist[-3:]})", history=dist)
    # U_{M_eff}(x, 1): mass scaling by theta^(-1/(2-p)) sets the age to 1
    mu = theta ** (-1.0 / (2.0 - p))
    F = Field.from_half(g, mu * half, 1.0)
    M_eff = m0 * mu
    report = {
        "method": "zoom",
        "converged": True,
        "cycles": cycle,
        "steps": steps,
        "wall_time": _time.perf_counter() - start,
        "tol": cfg.tol,
        "distances": dist,
        "theta": thetas,
        "physical_time": phys,
        "mass": M_eff,
        "initial_mass": m0,
        "eps": cfg.eps,
        "tail_slopes": _tail_summary(F, cfg.params),
    }
    return Profile(g, F.values, M_eff, cfg.params, report)


def _extract_direct(u0: Field, cfg: ProfileConfig, progress=None) -> Profile:
    ex = derive_exponents(cfg.params)
    times = []
    t = cfg.t_first
    while t <= cfg.t_end * (1 + 1e-12):
        times.append(t)
        t *= 2.0
    if len(times) < 3:
        raise ValidationError("need at least three snapshot times between t_first and t_end")
    closure = cfg.tail_closure()
    ecfg = EvolveConfig(cfg.params, cfg.grid, times[-1], closure=closure, dt_safety=cfg.dt_safety,
                        snapshot_times=times, extinction_threshold=0.0)
    start = _time.perf_counter()
    traj = evolve_run(ecfg, u0)
    vs = [to_selfsim(f, f.time, ex, 0.0, closure) for f in traj.snapshots]
    dist = [float(np.max(np.abs(b.values - a.values)) / a.values.max()) for a, b in zip(vs, vs[1:])]
    if progress is not None:
        for k, d in enumerate(dist):
            progress(dict(cycle=k + 1, steps=traj.steps, distance=d, theta=times[k + 1],
                          mass=float(traj.mass[-1])))
    if not _converged(dist, cfg.tol):
        raise NumericalError(f"profile did not converge by t_end={cfg.t_end} (last distances {dist[-3:]})",
                             history=dist)
    v = vs[-1]
    F = Field(cfg.grid, np.maximum(v.values, 0.0), 1.0)
    M = float(traj.mass[0])
    report = {
        "method": "direct",
        "converged": True,
        "snapshots": len(vs),
        "steps": traj.steps,
        "wall_time": _time.perf_counter() - start,
        "tol": cfg.tol,
        "distances": dist,
        "times": times,
        "mass": M,
        "initial_mass": M,
        "tail_slopes": _tail_summary(F, cfg.params),
    }
    return Profile(cfg.grid, F.values, M, cfg.params, report)


def extract_profile(u0: Field, cfg: ProfileConfig, progress=None) -> Profile:
    """Run the direct solver from u0 until rescaled snapshots stop changing.

    Convergence: sup|v_{k+1} - v_k| <= tol * max v for two consecutive
    pairs.  Raises NumericalError carrying the distance history otherwise.
    """
    if u0.grid != cfg.grid:
        raise ValidationError("initial field lives on a different grid")
    if np.any(u0.values < 0):
        raise ValidationError("initial data must be nonnegative")
    if cfg.method == "zoom":
        return _extract_zoom(u0, cfg, progress)
    return _extract_direct(u0, cfg, progress)


@dataclass
class ZoomRun:
    """Physical-time record of zoom_evolve: t, sup norm and total mass."""

    t: np.ndarray
    linf: np.ndarray
    mass: np.ndarray
    compressions: int
    steps: int
    final: Field  # on the last zoomed grid, physical coordinates x * 2^compressions


def _half_width(half: np.ndarray) -> int:
    """Index of the first node below half the maximum."""
    below = np.flatnonzero(half < 0.5 * half.max())
    return int(below[0]) if below.size else half.size


def zoom_evolve(u0: Field, params: Params, t_end: float, record_times: Sequence[float],
                eps: float = 1e-2, core_nodes: int = 40, dt_safety: float = 1.0,
                closure: Optional[TailClosure] = None) -> ZoomRun:
    """Evolve even data in physical time, compressing the grid 2:1 whenever
    the half-maximum radius passes ``core_nodes`` nodes.

    Compression is the exact scaling v(y) = 2 u(2y) with time running
    2^(1/beta) times slower for v, so sup norms and times map back exactly.
    delta = eps * max v on the current grid.
    """
    if params.N != 1:
        raise ValidationError("zoom_evolve runs on the one-dimensional grid (N=1)")
    if not u0.is_even(1e-12):
        raise ValidationError("zoom_evolve needs even initial data")
    if not (t_end > 0):
        raise ValidationError("t_end must be > 0")
    rec = sorted(float(t) for t in record_times)
    if any(t < 0 or t > t_end for t in rec):
        raise ValidationError("record_times must lie in [0, t_end]")
    if not (2 <= core_nodes < u0.grid.mid // 4):
        raise ValidationError(f"core_nodes must lie in [2, {u0.grid.mid // 4})")
    _, beta = derive_exponents(params).require_self_similar()
    g = u0.grid
    x = g.x_half
    half = u0.half()
    tc = (closure or PowerTail()).resolved(params)
    op = DiscreteOperator(g, params, Nonlinearity(params.p, eps * half.max()), tc)
    fac = 2.0 ** (1.0 / beta)
    c = 0  # compressions so far
    t = 0.0
    steps = 0
    out_t, out_l, out_m = [], [], []

    def total(w):
        return 2.0 * float(np.trapezoid(w, dx=g.h)) + op.exterior_mass_even(w)

    while rec and rec[0] <= 0.0:
        out_t.append(rec.pop(0)); out_l.append(half.max()); out_m.append(total(half))
    while t < t_end * (1 - 1e-14):
        if _half_width(half) > core_nodes:
            half = _compress(half, x, op.fit_half(half))
            c += 1
            op = op.with_delta(eps * half.max())
        tscale = fac**c  # physical time per unit of grid time
        amp = 2.0 ** (-c)  # physical value per unit of grid value
        dt = stable_dt(op.w, op.nl, dt_safety) * tscale
        target = min(t_end, rec[0]) if rec else t_end
        h_t = min(dt, target - t)
        half = half - (h_t / tscale) * op.apply_even(half)
        if not np.all(np.isfinite(half)):
            raise NumericalError(f"instability at t={t:.6g}")
        t = target if target - t <= h_t * (1 + 1e-12) else t + h_t
        steps += 1
        if steps % 200 == 0:
            op = op.with_delta(eps * half.max())
        while rec and t >= rec[0] * (1 - 1e-14):
            out_t.append(rec.pop(0)); out_l.append(amp * half.max()); out_m.append(total(half))
    return ZoomRun(np.array(out_t), np.array(out_l), np.array(out_m), c, steps,
                   Field.from_half(g, half * 2.0 ** (-c), t))


def bump(grid: Grid, M: float = 1.0, radius: float = 1.0, center: float = 0.0) -> Field:
    """(1 - ((x-c)/radius)^2)_+^2 scaled to discrete mass M."""
    z = (grid.x - center) / radius
    v = np.maximum(1.0 - z * z, 0.0) ** 2
    m = np.trapezoid(v, dx=grid.h)
    if not (m > 0):
        raise ValidationError(f"bump radius {radius} is below the grid resolution")
    return Field(grid, M * v / m)


def convergence_report_json(profile: Profile, path=None) -> str:
    rep = dict(profile.convergence_report)
    rep.update({"N": profile.params.N, "s": profile.params.s, "p": profile.params.p,
                "regime": profile.regime.value, "R": profile.grid.R, "n": profile.grid.n,
                "monotonicity_defect": profile.monotonicity_defect()})
    text = json.dumps(rep, indent=2, default=float)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
