import numpy as np
import pytest
from scipy.integrate import quad

from xyzot.errors import ConvergenceError
from xyzot.quadrature import (CumulativeIntegral, GAUSS_WEIGHTS, KRONROD_WEIGHTS, NODES,
                              adaptive_quad, gauss_kronrod)


def test_rule_weights():
    assert KRONROD_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    assert GAUSS_WEIGHTS.sum() == pytest.approx(2.0, abs=1e-15)
    np.testing.assert_allclose(NODES, -NODES[::-1], atol=1e-16)


@pytest.mark.parametrize("deg", range(0, 22))
def test_kronrod_exact_for_polynomials(deg):
    val, _ = gauss_kronrod(lambda x: x ** deg, 0.0, 1.0)
    assert val == pytest.approx(1.0 / (deg + 1), rel=1e-13)


@pytest.mark.parametrize("f,a,b,bps", [
    (np.exp, 0.0, 3.0, ()),
    (lambda x: np.abs(x - 0.3), 0.0, 1.0, (0.3,)),
    (lambda x: np.sqrt(x), 0.0, 1.0, ()),
    (lambda x: np.where(x < 0.5, 1.0, 2.0), 0.0, 1.0, (0.5,)),
])
def test_adaptive_matches_scipy(f, a, b, bps):
    ours = adaptive_quad(f, a, b, breakpoints=bps, abs_tol=1e-12)
    ref, _ = quad(lambda x: float(f(np.array(x))), a, b, points=bps or None,
                  epsabs=1e-13, limit=200)
    assert ours == pytest.approx(ref, abs=1e-11)


def test_reversed_and_empty_interval():
    assert adaptive_quad(np.exp, 1.0, 0.0) == pytest.approx(-(np.e - 1), abs=1e-12)
    assert adaptive_quad(np.exp, 2.0, 2.0) == 0.0


def test_convergence_error():
    with pytest.raises(ConvergenceError):
        adaptive_quad(lambda x: 1.0 / np.abs(x - 0.31234), 0.0, 1.0, abs_tol=1e-14,
                      max_panels=50)


def test_cumulative_integral():
    ci = CumulativeIntegral(np.cos, 0.0, 2.0, breakpoints=(0.7,))
    s = np.linspace(0, 2, 501)
    np.testing.assert_allclose(ci(s), np.sin(s), atol=1e-13)
    assert ci.total == pytest.approx(np.sin(2.0), abs=1e-14)
    assert ci(0.5) == pytest.approx(np.sin(0.5), abs=1e-14)
    with pytest.raises(ValueError):
        ci(2.5)
