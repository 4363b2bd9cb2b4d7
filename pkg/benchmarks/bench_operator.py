"""Time one operator application with the numba kernels and with the numpy
fallback, on even (folded) and general fields.

    python benchmarks/bench_operator.py --sizes 1001 2001 4001 --repeat 5
"""
import argparse
import time

import numpy as np

from fplap import _kernels
from fplap.grid_field import Grid
from fplap.nonlinearity import Nonlinearity
from fplap.operator import DiscreteOperator, PowerTail
from fplap.params import Params


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, repeat, p=1.6, s=0.5):
    g = Grid(100.0, n)
    P = Params(1, s, p)
    op = DiscreteOperator(g, P, Nonlinearity(p, g.h), PowerTail())
    u = np.exp(-g.x**2 / 50.0) * (1.0 + 0.1 * np.sin(g.x))
    half = np.exp(-g.x_half**2 / 50.0)
    rows = []
    ref = {}
    for name in ("numba", "numpy"):
        if name == "numba" and not _kernels.HAVE_NUMBA:
            continue
        _kernels.set_backend(name)
        op.apply(u)  # compile / build tables outside the timing
        op.apply_even(half)
        tg = best_of(lambda: op.apply(u), repeat)
        te = best_of(lambda: op.apply_even(half), repeat)
        ref[name] = (op.apply(u), op.apply_even(half))
        rows.append((name, n, tg, te))
    if len(ref) == 2:
        dg = np.max(np.abs(ref["numba"][0] - ref["numpy"][0])) / np.max(np.abs(ref["numpy"][0]))
        de = np.max(np.abs(ref["numba"][1] - ref["numpy"][1])) / np.max(np.abs(ref["numpy"][1]))
    else:
        dg = de = float("nan")
    return rows, max(dg, de)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[1001, 2001, 4001])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'backend':8s} {'n':>6s} {'general [ms]':>13s} {'even [ms]':>10s}")
    for n in args.sizes:
        rows, diff = bench(n, args.repeat)
        for name, nn, tg, te in rows:
            print(f"{name:8s} {nn:6d} {1e3 * tg:13.2f} {1e3 * te:10.2f}")
        if len(rows) == 2:
            print(f"{'speedup':8s} {n:6d} {rows[1][2] / rows[0][2]:13.1f} {rows[1][3] / rows[0][3]:10.1f}"
                  f"   max rel diff {diff:.1e}")
    _kernels.set_backend("numba" if _kernels.HAVE_NUMBA else "numpy")


if __name__ == "__main__":
    main()
