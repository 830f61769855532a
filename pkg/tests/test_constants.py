import math

import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq

from xyzot.constants import (BRACKET, ModelConstants, default_constants, h_derivative,
                             h_residual, primal_value_closed_form, solve_constants)
from xyzot.errors import DomainError

C_P = 0.0548032410707197


def test_root_matches_brentq_oracle():
    oracle = brentq(h_residual, *BRACKET, xtol=1e-15, rtol=1e-15)
    assert solve_constants().l == pytest.approx(oracle, abs=1e-14)


def test_derived_constants_identities(k):
    assert k.r == pytest.approx(1 - 2 * k.l, abs=1e-16)
    assert k.alpha == pytest.approx(k.r / k.l, rel=1e-15)
    assert k.c == pytest.approx(k.l * k.r ** 2, rel=1e-15)
    assert k.l == pytest.approx(0.0945, abs=5e-4)
    assert k.alpha == pytest.approx(8.577, abs=1e-2)
    assert k.r == pytest.approx(0.8109, abs=1e-4)


def test_primal_value_against_quadrature(k):
    seg, _ = quad(lambda x: x * (1 - 2 * x) ** 2, 0, k.l, epsabs=1e-15)
    assert primal_value_closed_form(k) == pytest.approx(3 * seg + k.c * (k.r - k.l), abs=1e-15)
    assert k.primal_value == pytest.approx(C_P, abs=1e-15)


def test_h_sign_change_and_monotone():
    lo, hi = BRACKET
    assert h_residual(lo) > 0 > h_residual(hi)
    # h is strictly decreasing on the bracket, so the root is unique there
    grid = [lo + i * (hi - lo) / 1000 for i in range(1001)]
    assert all(h_derivative(x) < 0 for x in grid)


@pytest.mark.parametrize("bad", [0.0, 0.5, -0.1, 1.0])
def test_h_domain_error(bad):
    with pytest.raises(DomainError):
        h_residual(bad)


@given(st.floats(min_value=1e-4, max_value=0.49))
def test_h_derivative_matches_finite_difference(x):
    step = 1e-6 * max(x, 1e-3)
    lo, hi = max(x - step, 1e-9), min(x + step, 0.4999999)
    fd = (h_residual(hi) - h_residual(lo)) / (hi - lo)
    assert h_derivative(x) == pytest.approx(fd, rel=1e-4, abs=1e-4)


@pytest.mark.parametrize("tol", [1e-6, 1e-10, 1e-12, 1e-14])
def test_tolerances(tol):
    k = solve_constants(tol)
    assert abs(h_residual(k.l)) < tol


@pytest.mark.parametrize("tol", [0.0, -1.0, float("nan")])
def test_bad_tolerance(tol):
    with pytest.raises(DomainError):
        solve_constants(tol)


def test_from_l_rejects_outside_interval():
    with pytest.raises(DomainError):
        ModelConstants.from_l(0.6)


def test_constants_frozen_and_cached(k):
    assert default_constants() is default_constants()
    with pytest.raises(Exception):
        k.l = 0.1
    assert set(k.as_dict()) == {"l", "r", "alpha", "c", "primal_value"}
    assert k.log_alpha == pytest.approx(math.log(k.alpha))
