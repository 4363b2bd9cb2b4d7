"""Invariant checks run by ``fplap verify``.  Each check returns a dict with
name, passed, value, threshold and a one line detail; all are sized to run
in seconds."""
from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np

from .errors import NumericalError, ValidationError


def _result(name, passed, value, threshold, detail):
    return {"name": name, "passed": bool(passed), "value": value, "threshold": threshold, "detail": detail}


def check_exponents(tol=None):
    from .params import Params, derive_exponents, p1_root

    ex = derive_exponents(Params(1, 0.5, 1.4))
    err = max(abs(ex.p_c - 4.0 / 3.0), abs(ex.p_1 - p1_root(1, 0.5)), abs(ex.beta - 10.0))
    return _result("exponents", err < 1e-12, err, 1e-12, f"p_c={ex.p_c:.12f} p_1={ex.p_1:.12f} beta={ex.beta:g}")


def check_weights(tol=None):
    from .grid_field import Grid
    from .operator import KernelWeights, build_weights

    g = Grid(50.0, 1001)
    w = build_weights(g, 0.5, 1.5)
    rel = abs(w.total - KernelWeights.exact_total(g.h, 0.5, 1.5)) / w.total
    dec = bool(np.all(w.omega[:-1] > w.omega[1:]))
    return _result("weight_total", rel < 1e-10 and dec, rel, 1e-10, f"relative total error {rel:.2e}, decreasing={dec}")


def check_operator_symmetry(tol=None):
    from .grid_field import Field, Grid
    from .nonlinearity import Nonlinearity
    from .operator import DiscreteOperator, FrozenTail, ZeroTail
    from .params import Params

    g = Grid(20.0, 401)
    P, nl = Params(1, 0.5, 1.6), Nonlinearity(1.6, 0.0)
    u = np.random.default_rng(7).normal(size=g.n)
    op = DiscreteOperator(g, P, nl, ZeroTail())
    odd = float(np.max(np.abs(op.apply(-u) + op.apply(u))))
    const = float(np.max(np.abs(DiscreteOperator(g, P, nl, FrozenTail()).apply(np.full(g.n, 3.0)))))
    ok = odd == 0.0 and const == 0.0
    return _result("operator_odd_and_constant", ok, max(odd, const), 0.0, f"odd defect {odd:g}, constant {const:g}")


def check_comparison(tol=None):
    from .evolve import stable_dt
    from .grid_field import Grid
    from .nonlinearity import Nonlinearity
    from .operator import DiscreteOperator, PowerTail
    from .params import Params

    g = Grid(20.0, 201)
    P = Params(1, 0.5, 1.7)
    op = DiscreteOperator(g, P, Nonlinearity(1.7, g.h), PowerTail())
    dt = stable_dt(op.w, op.nl, 1.0)
    rng = np.random.default_rng(11)
    worst = np.inf
    for _ in range(10):
        u = rng.random(g.n)
        v = u + rng.random(g.n)
        for _ in range(50):
            u = u - dt * op.apply(u)
            v = v - dt * op.apply(v)
            worst = min(worst, float(np.min(v - u)))
    return _result("comparison_principle", worst >= -1e-13, worst, -1e-13, f"min(v-u) over 10 pairs x 50 steps = {worst:.3e}")


def check_mass(tol=None):
    from .evolve import EvolveConfig, run
    from .grid_field import Grid
    from .params import Params
    from .selfsim import bump

    g = Grid(100.0, 1001)
    cfg = EvolveConfig(Params(1, 0.5, 1.9), g, 0.5, extinction_threshold=0.0)
    tr = run(cfg, bump(g, 1.0, 2.0))
    drift = abs(tr.mass[-1] - tr.mass[0]) / tr.mass[0]
    return _result("mass_conservation", drift < 1e-2, drift, 1e-2, f"relative drift {drift:.2e} at t=0.5, p=1.9")


def check_sign_pattern(tol=None):
    from .constants import elliptic_power_action
    from .params import Params

    t = tol or 1e-8
    A = [elliptic_power_action(Params(1, 0.5, p), t).A for p in (1.2, 4.0 / 3.0, 1.4)]
    ok = A[0] > 0 and abs(A[1]) <= 1e-6 and A[2] < 0
    return _result("sign_pattern", ok, A, "+, 0, -", "A at p = 1.2, 4/3, 1.4: " + ", ".join(f"{a:.3e}" for a in A))


def check_barrier_flip(tol=None):
    from .constants import vss_amplitude
    from .exact_solutions import certify_barrier, closed_form
    from .grid_field import Grid
    from .params import Params

    P = Params(1, 0.5, 1.4)
    g = Grid(100.0, 2001)
    C = vss_amplitude(P, tol or 1e-8)
    sup = certify_barrier(closed_form("barrierlower", P, C1=2 * C), P, g, (2.0, 25.0), "super", cap="zeta")
    sub = certify_barrier(closed_form("barrierlower", P, C1=0.5 * C), P, g, (2.0, 25.0), "sub", cap="zeta")
    ok = sup.verdict and sub.verdict
    return _result("barrier_flip", ok, [sup.min_rel, sub.max_rel], "super at 2 C*, sub at C*/2",
                   f"E/G in [{sup.min_rel:.3f}, {sup.max_rel:.3f}] and [{sub.min_rel:.3f}, {sub.max_rel:.3f}]")


def check_tail_regression(tol=None):
    from .diagnostics import tail_slope
    from .grid_field import Field, Grid

    g = Grid(100.0, 2001)
    f = Field(g, np.maximum(np.abs(g.x), g.h) ** -2.0)
    s = tail_slope(f, (5.0, 50.0)).slope
    return _result("tail_regression", abs(s + 2) < 1e-6, s, -2.0, f"slope of r^-2 = {s:.9f}")


QUICK = [check_exponents, check_weights, check_operator_symmetry, check_tail_regression]
DEFAULT = QUICK + [check_comparison, check_mass, check_sign_pattern, check_barrier_flip]


def run_suite(name: str = "default", tol: Optional[float] = None) -> List[Dict]:
    suites = {"quick": QUICK, "default": DEFAULT}
    if name not in suites:
        raise ValidationError(f"verify.suite must be one of {sorted(suites)}, got {name!r}")
    out = []
    for check in suites[name]:
        try:
            out.append(check(tol))
        except (NumericalError, ValidationError) as e:
            out.append(_result(check.__name__.replace("check_", ""), False, None, None, f"raised: {e}"))
    return out
