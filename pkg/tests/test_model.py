import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hedgehog.model import (
    DomainError,
    PhysicalParams,
    bulk_potential,
    bulk_potential_derivative,
    correlation_length,
    derive_model_params,
    nondimensionalize,
    ode_rhs,
)

T_GRID = np.geomspace(1.001, 1e5, 50)
temps = st.floats(min_value=1.0001, max_value=1e6, allow_nan=False)


def test_values_at_t200():
    m = derive_model_params(200)
    assert m.h_plus == pytest.approx(10.7781, abs=1e-4)
    assert m.farfield_coeff == pytest.approx(2.77563, abs=1e-5)
    assert 2 * m.h_plus**2 - 3 * m.h_plus == pytest.approx(200, rel=1e-14)


def test_boundary_probe_t1_relaxed():
    m = derive_model_params(1.0, relaxed=True)
    assert m.h_plus == pytest.approx((3 + math.sqrt(17)) / 4, rel=1e-15)
    assert m.lambda_t_sq == pytest.approx(0.81718, abs=1e-5)
    assert m.lambda_t_sq <= 3


@pytest.mark.parametrize("t", [1.0, 0.5, -3.0, float("nan"), float("inf")])
def test_strict_mode_rejects(t):
    with pytest.raises(DomainError, match="t"):
        derive_model_params(t)


def test_relaxed_still_rejects_below_one():
    with pytest.raises(DomainError):
        derive_model_params(0.999, relaxed=True)


def test_identities_on_grid():
    for t in T_GRID:
        m = derive_model_params(t)
        scale = max(1.0, t)
        assert abs(2 * m.h_plus**2 - 3 * m.h_plus - t) <= 1e-12 * scale
        assert abs(m.farfield_coeff - t * m.lambda_t_sq) <= 1e-12
        assert abs(bulk_potential(1.0, m)) <= 1e-12
        assert abs(bulk_potential_derivative(1.0, m)) <= 1e-12


@given(temps)
def test_potential_minimum_at_one(t):
    m = derive_model_params(t)
    h = np.linspace(0, 1.5, 301)
    f = bulk_potential(h, m)
    assert f.min() >= -1e-10
    assert abs(bulk_potential(1.0, m)) < 1e-9 * max(1.0, m.h_plus**2 / t)


@given(temps, st.floats(-2, 2))
def test_derivative_matches_difference(t, h):
    m = derive_model_params(t)
    eps = 1e-6
    fd = (bulk_potential(h + eps, m) - bulk_potential(h - eps, m)) / (2 * eps)
    assert bulk_potential_derivative(h, m) == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_farfield_coeff_large_t_limit():
    assert derive_model_params(1e4).farfield_coeff == pytest.approx(3.0, rel=0.02)


def test_nondimensionalize_typical_constants():
    p = PhysicalParams(a2=0.042e6 * 2, b2=0.64e6, c2=0.35e6, L=1e-11, R_real=1e-6)
    t, g = nondimensionalize(p)
    assert t == pytest.approx(1.938, abs=1e-3)
    assert g.xi == pytest.approx(1.519e-8, rel=1e-3)
    assert g.R_tilde == pytest.approx(math.sqrt(t) * g.R_bar)


def test_correlation_length():
    assert correlation_length(0.64e6, 0.35e6, 1e-11) == pytest.approx(1.519e-8, rel=1e-3)


@given(st.floats(1e-9, 1e-3))
def test_doubling_radius(R):
    base = dict(a2=0.5e6, b2=0.64e6, c2=0.35e6, L=1e-11)
    t1, g1 = nondimensionalize(PhysicalParams(R_real=R, **base))
    t2, g2 = nondimensionalize(PhysicalParams(R_real=2 * R, **base))
    assert t1 == t2
    assert g2.R_bar == pytest.approx(2 * g1.R_bar, rel=1e-14)
    assert g2.R_tilde == pytest.approx(2 * g1.R_tilde, rel=1e-14)


def test_nondimensionalize_low_t_reports_value():
    p = PhysicalParams(a2=1e3, b2=0.64e6, c2=0.35e6, L=1e-11, R_real=1e-6)
    with pytest.raises(DomainError, match="t="):
        nondimensionalize(p)


@pytest.mark.parametrize("field", ["a2", "b2", "c2", "L", "R_real"])
def test_physical_params_positive(field):
    kw = dict(a2=1.0, b2=1.0, c2=1.0, L=1.0, R_real=1.0)
    kw[field] = 0.0
    with pytest.raises(DomainError):
        PhysicalParams(**kw)


def test_ode_rhs():
    m = derive_model_params(200)
    dh, d2h = ode_rhs(1.0, 1.0, 0.0, m)
    assert dh == 0.0 and d2h == pytest.approx(6.0)
    with pytest.raises(DomainError):
        ode_rhs(0.0, 0.0, 0.0, m)
