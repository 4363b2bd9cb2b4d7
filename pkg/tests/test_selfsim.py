import json

import numpy as np
import pytest

from fplap.diagnostics import tail_slope
from fplap.errors import NumericalError, ValidationError
from fplap.grid_field import Field, Grid, mass
from fplap.params import Params, derive_exponents
from fplap.selfsim import (Profile, ProfileConfig, RescaledConfig, bump, convergence_report_json,
                           drift_term, extract_profile, from_selfsim, profile_to_csv, run_rescaled,
                           to_selfsim)

P19 = Params(1, 0.5, 1.9)


def test_bump_mass_and_support():
    g = Grid(10.0, 201)
    b = bump(g, 3.0, 2.0)
    assert mass(b) == pytest.approx(3.0, rel=1e-14)
    assert np.all(b.values[np.abs(g.x) >= 2.0] == 0)
    with pytest.raises(ValidationError):
        bump(g, 1.0, 0.01, center=0.05)


def test_selfsim_roundtrip_and_mass():
    g = Grid(40.0, 4001)
    ex = derive_exponents(P19)
    u = Field.from_function(g, lambda x: np.exp(-x**2), time=2.0)
    v = to_selfsim(u, 2.0, ex)
    assert v.time == pytest.approx(np.log(2.0))
    # alpha = N beta keeps mass
    assert mass(v) == pytest.approx(mass(u), rel=1e-6)
    back = from_selfsim(v, 2.0, ex)
    # two linear interpolations: error of order (2^beta h)^2 / 8 * max|u''|
    np.testing.assert_allclose(back.values, u.values, atol=1e-3)


def test_drift_term_is_conservative():
    g = Grid(10.0, 101)
    x = g.x
    v = np.exp(-x**2)
    d = drift_term(v, x, g.h, 1.3, 0.0)
    # interior fluxes telescope; only the outer faces (carrying v_out = 0) remain
    assert np.sum(d) * g.h == pytest.approx(0.0, abs=1e-12)
    d1 = drift_term(v, x, g.h, 1.3, 0.5)
    assert np.sum(d1) * g.h == pytest.approx(1.3 * 2 * (g.R + g.h / 2) * 0.5, rel=1e-12)


def test_rescaled_flow_conserves_mass():
    g = Grid(60.0, 601)
    cfg = RescaledConfig(P19, g, 0.3)
    tr = run_rescaled(cfg, bump(g, 1.0, 3.0))
    assert abs(tr.mass[-1] / tr.mass[0] - 1) < 1e-2


def test_zoom_profile_small_grid():
    g = Grid(100.0, 501)
    pr = extract_profile(bump(g, 1.0, 4.0), ProfileConfig(P19, g, tol=1e-2, clock="exact"))
    d = pr.convergence_report["distances"]
    assert d[-1] <= 1e-2 and d[-2] <= 1e-2
    assert pr.evenness_defect() == 0.0
    assert pr.monotonicity_defect() < 1e-3
    s = tail_slope(pr.field, (10.0, 50.0)).slope
    assert -2.1 < s < -1.7
    # mass relation between profiles of different mass
    F2 = pr.at_mass(2 * pr.M)
    assert mass(F2) == pytest.approx(2 * mass(pr.field), rel=2e-2)
    rep = json.loads(convergence_report_json(pr))
    assert rep["regime"] == "UpperGood"
    assert profile_to_csv(pr).startswith("y,F\n")


def test_nonconvergence_carries_history():
    g = Grid(50.0, 251)
    cfg = ProfileConfig(P19, g, tol=1e-9, max_cycles=3, min_cycles=2, clock="exact")
    with pytest.raises(NumericalError) as ei:
        extract_profile(bump(g, 1.0, 4.0), cfg)
    # one distance per pair of consecutive cycles
    assert len(ei.value.history) == 2


def test_profile_config_validation():
    g = Grid(10.0, 11)
    for kw in (dict(clock="wall"), dict(method="magic"), dict(tol=0), dict(eps=1.5),
               dict(max_cycles=2), dict(t_first=5, t_end=1)):
        with pytest.raises(ValidationError):
            ProfileConfig(P19, g, **kw)
    with pytest.raises(ValidationError):
        ProfileConfig(Params(1, 0.5, 1.2), g)
    with pytest.raises(ValidationError):
        extract_profile(Field(g, -np.ones(11)), ProfileConfig(P19, g))


def test_profile_rejects_negative_values():
    g = Grid(1.0, 3)
    with pytest.raises(ValidationError):
        Profile(g, np.array([0.0, -1.0, 0.0]), 1.0, P19, {})


@pytest.fixture(scope="module")
def zoom_profiles():
    out = {}
    for n in (251, 501):
        g = Grid(100.0, n)
        out[n] = extract_profile(bump(g, 1.0, 4.0), ProfileConfig(P19, g, tol=1e-4, clock="exact"))
    return out


def test_profile_mass_includes_tail(zoom_profiles):
    pr = zoom_profiles[501]
    tr = run_rescaled(RescaledConfig(P19, pr.grid, 1e-9), pr.field.with_values(pr.values, time=0.0))
    # domain mass alone misses the slowly decaying tail beyond R
    assert abs(tr.mass[0] / pr.M - 1) < 1e-2
    assert tr.domain_mass[0] < tr.mass[0]


def test_rescaled_flow_fixed_point(zoom_profiles):
    pr = zoom_profiles[501]
    g = pr.grid
    relaxed = run_rescaled(RescaledConfig(P19, g, 6.0), pr.field.with_values(pr.values, time=0.0))
    tr = run_rescaled(RescaledConfig(P19, g, 1.0), relaxed.final)
    change = np.max(np.abs(tr.final.values - relaxed.final.values)) / relaxed.final.values.max()
    assert change < 1e-3
    assert abs(tr.mass[-1] / relaxed.mass[0] - 1) < 1e-2


def test_zoom_and_rescaled_paths_agree_at_first_order(zoom_profiles):
    # the upwind drift is first order, so the rescaled flow moves the zoom
    # profile by O(h); halving h should roughly halve the move
    moves = []
    for n in (251, 501):
        pr = zoom_profiles[n]
        tr = run_rescaled(RescaledConfig(P19, pr.grid, 1.0), pr.field.with_values(pr.values, time=0.0))
        moves.append(np.max(np.abs(tr.final.values - pr.values)) / pr.values.max())
    assert 0.3 < moves[1] / moves[0] < 0.7
