import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from xyzot.errors import DomainError, SamplerStallError
from xyzot.geometry import support_residuals
from xyzot.primal import (COMPONENTS, LAYERED, MEDIAN, PointCloud, capital_P, cloud_residuals,
                          density_p, density_q, density_table, diffur_residual, estimate_cost,
                          layered_projection_density, median_projection_density, sample_primal,
                          target_density, triangle_densities, triangle_to_cube)

THIRD = 1.0 / 3.0


def _P_oracle(x, k):
    """``(1-3x)^-2 int_0^x (1-3t)(f(1-t) - 4 f(2t)) dt`` by adaptive quadrature."""
    s, a = k.l * math.log(k.alpha), k.alpha
    f = lambda u: s * a ** u
    val, _ = quad(lambda t: (1 - 3 * t) * (f(1 - t) - 4 * f(2 * t)), 0, x,
                  epsabs=1e-14, epsrel=1e-14)
    return val / (1 - 3 * x) ** 2


def _p_oracle(x, k):
    """``p`` recovered from the first-order relation between ``p`` and ``P``."""
    s, a = k.l * math.log(k.alpha), k.alpha
    f = lambda u: s * a ** u
    return (f(1 - x) - 4 * f(2 * x) + 6 * _P_oracle(x, k)) / (1 - 3 * x)


@pytest.mark.parametrize("x", [0.0, 0.01, 0.05, 0.1, 0.2, 0.25, 0.3])
def test_P_against_quadrature(k, x):
    assert capital_P(x, k) == pytest.approx(_P_oracle(x, k), abs=1e-12)


@pytest.mark.parametrize("x", [0.0, 0.02, 0.1, 0.15, 0.2, 0.25])
def test_p_against_quadrature(k, x):
    assert density_p(x, k) == pytest.approx(_p_oracle(x, k), abs=1e-9)


def test_p_at_zero_closed_form(k):
    s, a, L = k.l * math.log(k.alpha), k.alpha, math.log(k.alpha)
    expected = s * ((a - 4) - 6 * (2 + a) / L - 18 * (1 - a) / L ** 2)
    assert density_p(0.0, k) == pytest.approx(expected, rel=1e-13)


def test_limits_at_one_third(k):
    d = triangle_densities(k)
    s, a, L = k.l * math.log(k.alpha), k.alpha, math.log(k.alpha)
    assert density_p(THIRD, k) == pytest.approx(s * L * a ** (2 / 3), rel=1e-13)
    assert capital_P(THIRD, k) == pytest.approx(0.5 * d.f(2 / 3), rel=1e-13)
    assert density_q(2 / 3, k) == pytest.approx(0.0, abs=1e-13)
    # both branches agree across the series hand-over
    edge = (1 - 0.3) / 3
    for fn_c, fn_s in ((d._p_closed, d._p_series), (d._P_closed, d._P_series)):
        assert fn_c(edge) == pytest.approx(fn_s(edge), abs=1e-12)


def test_P_derivative_is_p(k):
    h = 1e-5
    for x in np.linspace(0.01, THIRD - 0.01, 40):
        fd = (capital_P(x + h, k) - capital_P(x - h, k)) / (2 * h)
        assert fd == pytest.approx(density_p(x, k), abs=1e-6)


def test_nonnegative_on_grids(k):
    assert np.all(density_p(np.linspace(0, THIRD, 10_000), k) >= 0)
    assert np.all(density_q(np.linspace(0, 2 / 3, 10_000), k) >= -1e-14)
    assert capital_P(0.0, k) == 0.0
    assert density_q(0.0, k) == pytest.approx(target_density(0.0, k), abs=1e-16)


def test_diffur_residual(k):
    assert abs(diffur_residual(0.0, k)) < 1e-10
    assert abs(diffur_residual(0.3, k)) < 1e-8
    grid = np.linspace(0, THIRD - 1e-6, 1000)
    assert np.max(np.abs(diffur_residual(grid, k))) < 1e-8


def test_projections_sum_to_target(k):
    grid = np.linspace(0, 1, 10_000)
    total = layered_projection_density(grid, k) + median_projection_density(grid, k)
    np.testing.assert_allclose(total, target_density(grid, k), atol=1e-8)


def test_projection_examples(k):
    d = triangle_densities(k)
    assert layered_projection_density(0.0, k) == 0.0
    left = 2 * d.P(THIRD)
    right = (3 * (2 / 3) - 2) * d.p(THIRD) + 2 * d.P(THIRD)
    assert left == pytest.approx(right, abs=1e-9)
    assert layered_projection_density(1.0, k) == pytest.approx(density_p(0.0, k), abs=1e-14)
    assert median_projection_density(THIRD, k) == pytest.approx(density_q(THIRD, k))
    assert median_projection_density(5 / 6, k) == pytest.approx(4 * density_q(THIRD, k))
    x = np.linspace(0, THIRD, 500)
    np.testing.assert_allclose(4 * median_projection_density(2 * x, k),
                               median_projection_density(1 - x, k), atol=1e-8)


def test_mass_budget(k):
    d = triangle_densities(k)
    assert 3 * k.l + d.mass_layered + d.mass_median == pytest.approx(1.0, abs=1e-12)
    assert d.mass_layered + d.mass_median == pytest.approx(k.r - k.l, abs=1e-12)
    moment, _ = quad(lambda t: (t - 2 / 3) * target_density(t, k), 0, 1, epsabs=1e-13)
    assert abs(moment) < 1e-10


@pytest.mark.parametrize("fn,bad", [(density_p, 0.34), (density_p, -0.01), (capital_P, 0.4),
                                    (density_q, 0.7), (target_density, 1.1),
                                    (layered_projection_density, -0.5)])
def test_domain_errors(k, fn, bad):
    with pytest.raises(DomainError):
        fn(bad, k)


def test_triangle_to_cube(k):
    np.testing.assert_allclose(triangle_to_cube(1, 1, 0, k), (k.r, k.r, k.l), rtol=1e-14)
    np.testing.assert_allclose(triangle_to_cube(2 / 3, 2 / 3, 2 / 3, k), (k.c ** (1 / 3),) * 3,
                               rtol=1e-14)
    for u, v in [(0.3, 0.9), (0.5, 0.5), (1.0, 0.4)]:
        pt = triangle_to_cube(u, v, 2 - u - v, k)
        assert np.prod(pt) == pytest.approx(k.c, abs=1e-10)
        assert support_residuals(np.array([pt]), k)[0] <= 1e-10
    with pytest.raises(DomainError):
        triangle_to_cube(0.5, 0.5, 0.5, k)


def test_sampler_reproducible_and_confined(k):
    a = sample_primal(20_000, 3, k)
    b = sample_primal(20_000, 3, k)
    np.testing.assert_array_equal(a.points, b.points)
    assert np.all((a.points >= 0) & (a.points <= 1))
    assert cloud_residuals(a, k).max() <= 1e-8
    assert set(a.tags) <= set(COMPONENTS)
    assert a.weights.sum() == pytest.approx(1.0)


def test_component_proportions(k):
    d = triangle_densities(k)
    n = 200_000
    cloud = sample_primal(n, 5, k)
    expected = [k.l, k.l, k.l, d.mass_layered, d.mass_median]
    counts = np.bincount(cloud.components, minlength=5)
    for c, p in zip(counts, expected):
        assert abs(c / n - p) < 4 * math.sqrt(p * (1 - p) / n)


def _cdf_from_density(density, lo, hi):
    grid = np.linspace(lo, hi, 4001)
    vals = density(grid)
    cum = np.concatenate([[0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid))])
    cum /= cum[-1]
    return lambda x: np.interp(x, grid, cum)


def test_layered_and_median_parts_have_their_projections(k):
    d = triangle_densities(k)
    cloud = sample_primal(200_000, 9, k)
    u = np.log(cloud.points / k.l) / math.log(k.alpha)
    lay = u[cloud.components == LAYERED, 0]
    med = u[cloud.components == MEDIAN, 0]
    assert stats.kstest(lay, _cdf_from_density(d.layered_projection, 0, 1)).pvalue > 1e-3
    assert stats.kstest(med, _cdf_from_density(d.median_projection, 0, 1)).pvalue > 1e-3


def test_sampler_stall(k, monkeypatch):
    d = triangle_densities(k)
    monkeypatch.setattr(d, "p_envelope", d.p_envelope * 1e6)
    with pytest.raises(SamplerStallError):
        sample_primal(50_000, 0, k)


def test_sampler_rejects_empty(k):
    with pytest.raises(DomainError):
        sample_primal(0, 0, k)


def test_estimate_cost():
    assert estimate_cost(PointCloud([[0, 1, 1]], [0], 0)) == (0.0, 0.0)
    assert estimate_cost(PointCloud([[1, 1, 1]], [0], 0)) == (1.0, 0.0)
    with pytest.raises(ValueError):
        estimate_cost(PointCloud(np.zeros((0, 3)), [], 0))


def test_density_table(k):
    tab = density_table(300, k)
    assert list(tab) == ["t", "p", "P", "q", "f", "p_star", "q_star"]
    assert np.isnan(tab["p"][-1]) and not np.isnan(tab["q"][0])
    with pytest.raises(DomainError):
        density_table(0, k)
