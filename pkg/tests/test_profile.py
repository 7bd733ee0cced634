import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import spherical_jn

from hedgehog.analysis import a2_interval
from hedgehog.model import DomainError, derive_model_params
from hedgehog.profile import (
    BracketNotFound,
    Profile,
    SolverError,
    classify_shot,
    integrate,
    scan_shots,
    solve_finite_ball,
    solve_semi_infinite,
)

from conftest import ball, semi_infinite

A2_STAR_200 = 0.13237588750664  # frozen from the marching solver


def test_small_and_large_amplitudes_classified():
    m = derive_model_params(200)
    assert classify_shot(1e-3, m).cls == "P"
    assert classify_shot(10.0, m).cls == "R"


@settings(max_examples=25, deadline=None)
@given(st.floats(-4, 2))
def test_classification_sides_of_root(log_a2):
    a2 = 10.0**log_a2
    if abs(a2 / A2_STAR_200 - 1) < 1e-6:
        return
    cls = classify_shot(a2, derive_model_params(200), r_max=75).cls
    assert cls == ("P" if a2 < A2_STAR_200 else "R")


def test_single_transition_in_log_scan():
    m = derive_model_params(200)
    classes = "".join(o.cls[0] for o in scan_shots(m, np.geomspace(1e-4, 1e2, 200), r_max=75))
    assert set(classes) == {"P", "R"}
    assert classes.count("PR") == 1 and classes.count("RP") == 0


def test_first_stationary_point_small_amplitude():
    # regular branch of the linearised equation is 15 j_2(r)
    r = np.linspace(0.5, 6, 200_001)
    r_peak = r[np.argmax(15 * spherical_jn(2, r))]
    out = classify_shot(1e-4, derive_model_params(200))
    assert out.cls == "P"
    assert out.witness_r == pytest.approx(r_peak, rel=0.02)
    assert r_peak == pytest.approx(3.342, abs=1e-3)


def test_integrate_events_stop_trajectory():
    m = derive_model_params(200)
    tr = integrate(10.0, m, 50, grid=np.linspace(0, 50, 101), events=("overshoot",))
    assert tr.status == "overshoot"
    assert tr.r[-1] <= tr.r_stop
    assert tr.h_stop == pytest.approx(1.0, abs=1e-6)


def test_integrate_validation():
    m = derive_model_params(200)
    with pytest.raises(ValueError):
        integrate(-1.0, m, 5.0)
    with pytest.raises(ValueError):
        integrate(0.1, m, 1e-4)
    with pytest.raises(ValueError):
        classify_shot(0.0, m)


@pytest.mark.parametrize("t,a2", [(5, 0.18094), (50, 0.13912), (200, 0.132376), (1000, 0.12905)])
def test_semi_infinite_core_amplitude(t, a2):
    m, p = semi_infinite(float(t))
    assert p.a2 == pytest.approx(a2, abs=1e-5)
    lo, hi = a2_interval(m)
    assert lo <= p.a2 <= hi


@pytest.mark.parametrize("t", [50.0, 200.0, 1000.0])
def test_semi_infinite_monotone(t):
    _, p = semi_infinite(t)
    assert np.all(p.dh[1:-1] > 0)
    assert np.all(np.diff(p.h) > 0)
    assert 0.99 < p.h[-1] < 1


def test_semi_infinite_deterministic():
    m = derive_model_params(200)
    a, b = solve_semi_infinite(m), solve_semi_infinite(m)
    assert a.a2 == b.a2
    assert np.array_equal(a.h, b.h) and np.array_equal(a.dh, b.dh)


def test_semi_infinite_meta(hedgehog200):
    _, p = hedgehog200
    meta = p.solver_meta
    assert meta["scan_classes"].startswith("P") and meta["scan_classes"].endswith("R")
    lo, hi = meta["a2_bracket"]
    assert lo <= p.a2 <= hi and hi - lo < 1e-11
    assert p.domain == {"kind": "semi-infinite", "r_max": 50.0}


def test_no_bracket_raises():
    with pytest.raises(BracketNotFound):
        solve_semi_infinite(derive_model_params(200), scan=(1e-4, 1e-3, 5))


def test_evaluate_matches_grid(hedgehog200):
    _, p = hedgehog200
    idx = np.arange(0, p.grid.size, 97)
    h, dh = p.evaluate(p.grid[idx])
    np.testing.assert_allclose(h, p.h[idx], rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(dh, p.dh[idx], rtol=1e-8, atol=1e-12)
    h0, _ = p.evaluate([0.0, 5e-4])
    assert h0[0] == 0.0 and h0[1] == pytest.approx(p.a2 * 2.5e-7, rel=1e-5)
    with pytest.raises(DomainError):
        p.evaluate([60.0])


def test_from_arrays_interpolates():
    r = np.linspace(0, 2, 201)
    p = Profile.from_arrays(r, r**2, 2 * r, t=200.0)
    h, dh = p.evaluate([0.505, 1.2345])
    np.testing.assert_allclose(h, [0.505**2, 1.2345**2], rtol=1e-10)
    assert p.domain == {"kind": "ball", "R": 2.0}


@pytest.mark.parametrize("t", [5.0, 200.0, 1000.0])
@pytest.mark.parametrize("R", [0.3, 5.0, 20.0])
def test_finite_ball_boundary_condition(t, R):
    _, p = ball(t, R)
    assert p.h[-1] == pytest.approx(1.0, abs=1e-9)
    assert p.h[0] == 0.0
    mid = p.evaluate([R / 2])[0][0]
    assert 0 < mid < 1
    assert p.domain == {"kind": "ball", "R": R}


def test_large_ball_approaches_semi_infinite():
    _, b = ball(200.0, 20.0)
    assert b.a2 == pytest.approx(A2_STAR_200, rel=1e-9)


def test_small_ball_scaling():
    # h ~ a2 r^2 with h(R) = 1 forces a2 ~ 1/R^2 for tiny balls
    _, b = ball(200.0, 0.3)
    assert b.a2 * 0.3**2 == pytest.approx(1.0, rel=0.02)


def test_finite_ball_validation():
    m = derive_model_params(200)
    with pytest.raises(DomainError):
        solve_finite_ball(m, 0.0)
    with pytest.raises(SolverError):
        solve_finite_ball(m, 1.0, scan_points=1)
