import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fplap import _kernels
from fplap.errors import ValidationError
from fplap.grid_field import Field, Grid
from fplap.nonlinearity import Nonlinearity
from fplap.operator import (DiscreteOperator, FrozenTail, KernelWeights, PowerTail, ZeroTail,
                            apply_op, build_weights, cell_weights, make_closure)
from fplap.params import Params

from oracles import discrete_operator_bruteforce


def test_cell_weights_against_quadrature():
    from scipy.integrate import quad

    h, s, p = 0.3, 0.4, 1.7
    om = cell_weights(h, s, p, 5)
    ref = [quad(lambda z: z ** (-1 - s * p), (j - 0.5) * h, (j + 0.5) * h)[0] for j in range(1, 6)]
    np.testing.assert_allclose(om, ref, rtol=1e-10)


@given(st.floats(0.05, 0.95), st.floats(1.05, 1.95))
@settings(max_examples=30, deadline=None)
def test_total_weight_closed_form(s, p):
    g = Grid(5.0, 101)
    w = build_weights(g, s, p)
    assert w.total == pytest.approx(KernelWeights.exact_total(g.h, s, p), rel=1e-12)
    assert np.all(np.diff(w.omega) < 0)


def _op(p=1.6, s=0.5, R=10.0, n=41, closure=None, delta=0.0):
    g = Grid(R, n)
    return DiscreteOperator(g, Params(1, s, p), Nonlinearity(p, delta), closure or ZeroTail())


def test_interior_sum_matches_bruteforce():
    # a closure that is identically zero outside still sees the exterior
    # cells through Phi(u_i - 0); remove that part to isolate the interior sum
    op = _op(n=21)
    u = np.random.default_rng(3).normal(size=21)
    full = op.apply(u)
    W, tw = op._gen_tables()
    # left cells see node i as the right cells see its mirror n-1-i
    ext = (np.sign(u) * np.abs(u) ** (op.params.p - 1)) * (W.sum(axis=1) + tw + W[::-1].sum(axis=1) + tw[::-1])
    ref = discrete_operator_bruteforce(u, op.grid.h, 0.5, 1.6)
    np.testing.assert_allclose(full - ext, ref, rtol=1e-9, atol=1e-12)


def test_odd_and_kills_constants():
    op = _op()
    u = np.random.default_rng(0).normal(size=op.grid.n)
    np.testing.assert_array_equal(op.apply(-u), -op.apply(u))
    frozen = _op(closure=FrozenTail())
    assert np.max(np.abs(frozen.apply(np.full(op.grid.n, 2.5)))) == 0.0


def test_even_path_matches_general():
    op = _op(p=1.9, n=201, R=20.0, closure=PowerTail())
    g = op.grid
    u = 1 / (1 + g.x**2)
    np.testing.assert_allclose(op.apply_even(u[g.mid:]), op.apply(u)[g.mid:], rtol=1e-11, atol=1e-14)


def test_apply_node_matches_apply():
    op = _op(p=1.4, n=101, closure=PowerTail())
    u = np.exp(-op.grid.x**2 / 4) + 0.1 * np.exp(-(op.grid.x - 2) ** 2)
    full = op.apply(u)
    for i in (0, 13, 50, 77, 100):
        assert op.apply_node(u, i) == pytest.approx(full[i], rel=1e-11, abs=1e-13)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_numba_and_numpy_backends_agree():
    op = _op(p=1.3, n=301, R=30.0, closure=PowerTail(), delta=0.05)
    u = np.exp(-op.grid.x**2 / 10)
    res = {}
    for b in ("numba", "numpy"):
        _kernels.set_backend(b)
        res[b] = (op.apply(u), op.apply_even(u[op.grid.mid:]))
    _kernels.set_backend("numba")
    for a, b in zip(res["numba"], res["numpy"]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_translation_invariance_away_from_boundary():
    op = _op(p=1.7, n=401, R=40.0)
    x = op.grid.x
    u = np.exp(-x**2)
    v = np.exp(-(x - 2.0) ** 2)
    Lu, Lv = op.apply(u), op.apply(v)
    shift = int(round(2.0 / op.grid.h))
    mid = op.grid.mid
    sl = slice(mid - 50, mid + 50)
    # the zero exterior sees the shifted bump from slightly different distances
    np.testing.assert_allclose(Lv[mid - 50 + shift : mid + 50 + shift], Lu[sl], rtol=1e-3, atol=1e-8)


def test_power_tail_fit_recovers_power():
    g = Grid(50.0, 501)
    r = g.x_half
    u = 3.0 * np.maximum(r, 1.0) ** -1.5
    ft = PowerTail(1.5).fit(r, u, g.R)
    assert ft.A == pytest.approx(3.0, rel=1e-12)
    assert ft.mass() == pytest.approx(3.0 * g.R ** -0.5 / 0.5, rel=1e-12)


def test_make_closure():
    assert isinstance(make_closure("zero"), ZeroTail)
    assert make_closure("power", 2.0).q == 2.0
    with pytest.raises(ValidationError):
        make_closure("linear")
    with pytest.raises(ValidationError):
        PowerTail(-1.0)


def test_apply_op_wrapper_even_and_general():
    g = Grid(10.0, 101)
    w = build_weights(g, 0.5, 1.8)
    nl = Nonlinearity(1.8, 0.0)
    f = Field.from_function(g, lambda x: np.exp(-x**2))
    a = apply_op(f, w, nl, ZeroTail())
    b = apply_op(f.with_values(f.values * (1 + 1e-15 * (g.x > 0))), w, nl, ZeroTail())
    np.testing.assert_allclose(a.values, b.values, rtol=1e-9, atol=1e-12)
    with pytest.raises(ValidationError):
        apply_op(f, build_weights(Grid(5.0, 101), 0.5, 1.8), nl, ZeroTail())
