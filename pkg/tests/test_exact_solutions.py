import numpy as np
import pytest
from scipy.special import zeta

from fplap.constants import vss_amplitude
from fplap.errors import ValidationError
from fplap.exact_solutions import (Barenblatt, closed_form, certify_barrier, discretize, elliptic_residual,
                                   eval_closed, evolution_residual, zeta_origin_value)
from fplap.grid_field import Grid
from fplap.params import Params, derive_exponents

P14 = Params(1, 0.5, 1.4)


def test_vss_formula_and_time_law():
    cf = closed_form("VSS", P14, C_inf=2.0, T=1.0)
    assert eval_closed(cf, 1.0, 0.0) == 2.0
    # amplitude grows like (t+T)^(1/(2-p))
    assert eval_closed(cf, 1.0, 7.0) / eval_closed(cf, 1.0, 0.0) == pytest.approx(8 ** (1 / 0.6))
    assert eval_closed(cf, 2.0, 0.0) == pytest.approx(2.0 * 2 ** (-7 / 6))
    assert closed_form("VSS", P14).C_inf == pytest.approx(vss_amplitude(P14))


def test_very_fast_vss_vanishes_at_T():
    cf = closed_form("VSS", Params(1, 0.5, 1.2), T=1.0)
    assert cf.very_fast
    assert eval_closed(cf, 1.0, 1.0) == 0.0
    assert eval_closed(cf, 1.0, 0.5) > 0


def test_singular_forms_need_cap():
    cf = closed_form("BarrierLower", P14, C1=1.0)
    with pytest.raises(ValidationError):
        eval_closed(cf, 0.0)
    assert eval_closed(cf, 0.0, r_cap=0.5) == pytest.approx(0.5 ** (-7 / 6))


def test_closed_form_validation():
    with pytest.raises(ValidationError):
        closed_form("nope", P14)
    with pytest.raises(ValidationError):
        closed_form("BarrierLower", P14)
    with pytest.raises(ValidationError):
        closed_form("BarrierLower", P14, C1=1.0, T=2.0)
    with pytest.raises(ValidationError):
        closed_form("VSS", Params(1, 0.5, 1.9))
    with pytest.raises(ValidationError):
        closed_form("BarrierCritical", P14, C1=1.0)


def test_barenblatt_solves_local_profile_equation():
    # |F'|^(p-2) F' = -beta y F for the s = 1 problem, N = 1
    p = 1.7
    beta = 1 / (p - (2 - p))
    m, e = (p - 1) / (2 - p), p / (p - 1)
    k = beta ** (1 / (p - 1)) / (m * e)
    cf = Barenblatt(1.0, k, p)
    y = np.linspace(0.1, 5, 2001)
    F = cf.formula(y, 0.0)
    dF = np.gradient(F, y, edge_order=2)
    lhs = np.abs(dF) ** (p - 2) * dF
    np.testing.assert_allclose(lhs[5:-5], -beta * y[5:-5] * F[5:-5], rtol=1e-4)
    assert cf.tail_exponent == pytest.approx(p / (2 - p))


def test_zeta_origin_value_closes_the_riemann_sum():
    # h * sum_{j != 0} f(jh) + h * f0 = integral of f over the same span, f = (r^-e)^(p-1)
    e, p, h, J = 7 / 6, 1.4, 0.01, 4_000_000
    a = e * (p - 1)
    u0 = zeta_origin_value(1.0, e, p, h)
    j = np.arange(1, J + 1)
    riemann = 2 * h * np.sum((j * h) ** -a) + h * u0 ** (p - 1)
    exact = 2 * (J * h + 0.5 * h) ** (1 - a) / (1 - a)
    assert riemann == pytest.approx(exact, rel=1e-4)
    assert u0 == pytest.approx((2 * abs(zeta(a)) * h ** -a) ** (1 / (p - 1)))
    with pytest.raises(ValidationError):
        zeta_origin_value(1.0, 3.0, p, h)


def test_discretize_caps():
    g = Grid(10.0, 101)
    cf = closed_form("BarrierLower", P14, C1=1.0)
    v = discretize(cf, g)
    assert v.values[g.mid] == pytest.approx(g.h ** (-7 / 6))
    z = discretize(cf, g, cap="zeta", p=1.4)
    assert z.values[g.mid] == pytest.approx(zeta_origin_value(1.0, 7 / 6, 1.4, g.h))
    np.testing.assert_array_equal(np.delete(v.values, g.mid), np.delete(z.values, g.mid))
    with pytest.raises(ValidationError):
        discretize(closed_form("BarrierUpper", Params(1, 0.5, 1.9), C1=1.0), g, cap="zeta", p=1.9)


def test_power_pc_is_nearly_stationary():
    P = Params(1, 0.5, 4 / 3)
    g = Grid(100.0, 4001)
    r = elliptic_residual(closed_form("PowerPc", P), P, g, (2.0, 25.0), cap="zeta")
    assert np.max(np.abs(r)) < 0.1


def test_barrier_report_and_validation():
    g = Grid(50.0, 1001)
    C = vss_amplitude(P14)
    rep = certify_barrier(closed_form("BarrierLower", P14, C1=2 * C), P14, g, (2.0, 12.0), "super", cap="zeta")
    assert rep.verdict and rep.min_rel > 0
    assert rep.as_dict()["kind"] == "BarrierLower"
    with pytest.raises(ValidationError):
        certify_barrier(closed_form("BarrierLower", P14, C1=C), P14, g, (2.0, 12.0), "both")
    with pytest.raises(ValidationError):
        certify_barrier(closed_form("BarrierLower", P14, C1=C), P14, g, (0.05, 12.0), "super")
    with pytest.raises(ValidationError):
        certify_barrier(closed_form("BarrierLower", P14, C1=C), P14, g, (2.0, 49.0), "super")


def test_vss_residual_sign_free_at_amplitude():
    g = Grid(100.0, 4001)
    res = evolution_residual(closed_form("VSS", P14, T=1.0), P14, g, 0.0, (2.0, 25.0), cap="zeta")
    assert np.max(np.abs(res)) < 0.1
