import math

import pytest
from hypothesis import given, strategies as st

from fplap.errors import ValidationError
from fplap.params import (Params, Regime, classify_regime, decay_exponent, derive_exponents,
                          p1_closed_form, p1_root, p_c_of)


def test_exponents_at_reference_point():
    ex = derive_exponents(Params(1, 0.5, 1.4))
    assert ex.p_c == pytest.approx(4 / 3, abs=1e-15)
    assert ex.beta == pytest.approx(10.0, rel=1e-13)
    assert ex.alpha == pytest.approx(10.0, rel=1e-13)
    assert ex.gamma == pytest.approx(7 / 6, rel=1e-13)
    assert ex.p_1 == pytest.approx((math.sqrt(17) - 1) / 2, abs=1e-14)


def test_upper_range_exponents():
    ex = derive_exponents(Params(1, 0.5, 1.9))
    assert ex.beta == pytest.approx(1 / 0.85)
    assert ex.alpha == pytest.approx(20 / 17)


def test_no_self_similarity_below_pc():
    ex = derive_exponents(Params(1, 0.5, 1.2))
    assert ex.alpha is None and ex.beta is None
    with pytest.raises(ValidationError):
        ex.require_self_similar()


@pytest.mark.parametrize("bad", [(0, 0.5, 1.5), (1.5, 0.5, 1.5), (1, 0.0, 1.5), (1, 1.0, 1.5),
                                 (1, 0.5, 1.0), (1, 0.5, 2.0), (1, 0.5, float("nan"))])
def test_params_validation(bad):
    with pytest.raises(ValidationError):
        Params(*bad)


@pytest.mark.parametrize("p,reg", [(1.2, Regime.VeryFast), (4 / 3, Regime.CriticalPc),
                                   (1.4, Regime.LowerGood), ((math.sqrt(17) - 1) / 2, Regime.CriticalP1),
                                   (1.9, Regime.UpperGood)])
def test_classify(p, reg):
    assert classify_regime(Params(1, 0.5, p)) is reg


def test_decay_exponent_switches_at_p1():
    assert decay_exponent(Params(1, 0.5, 1.4)) == pytest.approx(7 / 6)
    assert decay_exponent(Params(1, 0.5, 1.9)) == pytest.approx(1.95)


@given(st.integers(1, 6), st.floats(0.05, 0.95))
def test_p1_closed_form_is_root(N, s):
    p = p1_closed_form(N / s)
    assert 1 < p < 2
    assert s * p * (p - 1) == pytest.approx(N * (2 - p), abs=1e-12)
    assert p == pytest.approx(p1_root(N, s), abs=1e-12)


@given(st.integers(1, 6), st.floats(0.05, 0.95))
def test_pc_below_p1(N, s):
    assert 1 < p_c_of(N, s) < p1_closed_form(N / s) < 2


@given(st.integers(1, 4), st.floats(0.1, 0.9), st.floats(0.0, 1.0))
def test_alpha_equals_N_beta(N, s, frac):
    pc, p1 = p_c_of(N, s), p1_closed_form(N / s)
    p = pc + (2 - pc) * (0.01 + 0.98 * frac)
    ex = derive_exponents(Params(N, s, p))
    assert ex.beta > 0
    assert ex.alpha == pytest.approx(N * ex.beta)
    # tail exponent gamma exceeds N exactly above p_c
    assert ex.gamma > N
