"""Explicit (3,1)-stochastic measure concentrated on the support M.

The measure has three parts:

* ``mu_lin``: mass ``l`` uniformly on each of the segments ``M_x, M_y, M_z``
  (by length), parametrized by the small coordinate ``t in [0, l]``;
* a *layered* measure on the triangle ``Delta = {u+v+w = 2} cap [0,1]^3``
  whose density depends only on ``min(1-u, 1-v, 1-w)`` through ``p``;
* a *median* measure on the three medians of ``Delta`` with density ``q``.

The two triangle parts live in logarithmic coordinates
``u = ln(x/l) / ln(alpha)`` and are mapped onto ``M_2`` by
:func:`triangle_to_cube`.  With the scale ``s = l ln(alpha)`` the triangle
target density is ``f(u) = s alpha^u``, which maps to Lebesgue density one on
``[l, r]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .constants import ModelConstants
from .errors import DomainError, SamplerStallError
from .geometry import support_residuals
from .quadrature import CumulativeIntegral, adaptive_quad

THIRD = 1.0 / 3.0
TWO_THIRDS = 2.0 / 3.0

COMPONENTS = ("segment_x", "segment_y", "segment_z", "layered", "median")
SEGMENT_X, SEGMENT_Y, SEGMENT_Z, LAYERED, MEDIAN = range(5)

# Below this value of 1 - 3x the closed forms lose digits to cancellation
# (they carry (1-3x)^-3); the Taylor series in 1 - 3x takes over.
SERIES_BAND = 0.3
_SERIES_TERMS = 40

CDF_KNOTS = 10_000
MIN_ACCEPTANCE = 1e-4


def _check_range(x, lo, hi, name):
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= lo) & (arr <= hi))):
        raise DomainError(f"{name} must lie in [{lo}, {hi}]")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


class TriangleDensities:
    """The functions ``f``, ``p``, ``P`` and ``q`` for one set of constants.

    Besides the densities this holds the total masses of the layered and
    median parts, the rejection envelope for ``p`` and the inverse-CDF table
    for ``q``; all are built once at construction and never mutated.
    """

    def __init__(self, k: ModelConstants):
        self.k = k
        self.alpha = k.alpha
        self.log_alpha = math.log(k.alpha)
        self.scale = k.l * self.log_alpha
        L = self.log_alpha
        self._series_amp = self.scale * self.alpha ** TWO_THIRDS
        ks = np.arange(_SERIES_TERMS, dtype=float)
        fact = np.array([math.factorial(int(i)) for i in ks], dtype=float)
        self._coef = (L / 3.0) ** ks / fact * (1.0 - 4.0 * (-2.0) ** ks)
        self._g0 = self._antiderivative(0.0)

        self.mass_layered = adaptive_quad(self.layered_projection, 0.0, 1.0,
                                          breakpoints=(TWO_THIRDS,), abs_tol=1e-14)
        self.mass_median = 3.0 * adaptive_quad(self.q, 0.0, TWO_THIRDS, abs_tol=1e-14)
        self.p_envelope = self._envelope()
        self._q_knots = np.linspace(0.0, TWO_THIRDS, CDF_KNOTS + 1)
        cdf = CumulativeIntegral(self.q, 0.0, TWO_THIRDS, abs_tol=1e-13)(self._q_knots)
        self._q_cdf = cdf / cdf[-1]

    # -- target density on the triangle axes -------------------------------
    def f(self, u):
        return self.scale * np.power(self.alpha, u)

    def f_prime(self, u):
        return self.log_alpha * self.f(u)

    # -- closed forms -------------------------------------------------------
    def _antiderivative(self, t):
        # antiderivative of (1-3t) (alpha^(1-t) - 4 alpha^(2t)), without the scale
        L = self.log_alpha
        a = self.alpha
        lin = 1.0 - 3.0 * t
        return (np.power(a, 1.0 - t) * (-lin / L + 3.0 / L ** 2)
                - np.power(a, 2.0 * t) * (2.0 * lin / L + 3.0 / L ** 2))

    def _P_closed(self, x):
        y = 1.0 - 3.0 * x
        return self.scale * (self._antiderivative(x) - self._g0) / (y * y)

    def _p_closed(self, x):
        a, L = self.alpha, self.log_alpha
        y = 1.0 - 3.0 * x
        e1 = np.power(a, 1.0 - x)
        e2 = np.power(a, 2.0 * x)
        return self.scale * ((e1 - 4.0 * e2) / y
                             - 6.0 * (2.0 * e2 + e1) / (y * y * L)
                             - 18.0 * (e2 - e1) / (y ** 3 * L * L))

    # -- series in y = 1 - 3x ---------------------------------------------
    def _P_series(self, x):
        y = 1.0 - 3.0 * np.asarray(x, dtype=float)
        acc = np.zeros_like(y)
        for kk in range(_SERIES_TERMS - 1, -1, -1):
            acc = acc * y + self._coef[kk] / (kk + 2)
        return -self._series_amp / 3.0 * acc

    def _p_series(self, x):
        y = 1.0 - 3.0 * np.asarray(x, dtype=float)
        acc = np.zeros_like(y)
        for kk in range(_SERIES_TERMS - 1, 0, -1):
            acc = acc * y + self._coef[kk] * kk / (kk + 2)
        return self._series_amp * acc

    def _blend(self, x, closed, series):
        x = np.asarray(x, dtype=float)
        near = (1.0 - 3.0 * x) < SERIES_BAND
        far_x = np.where(near, 0.0, x)
        return np.where(near, series(x), closed(far_x))

    # -- public densities ---------------------------------------------------
    def p(self, x):
        return self._blend(x, self._p_closed, self._p_series)

    def P(self, x):
        return self._blend(x, self._P_closed, self._P_series)

    def q(self, w):
        w = np.asarray(w, dtype=float)
        return self.f(w) - 2.0 * self.P(0.5 * w)

    def layered_projection(self, x):
        x = np.asarray(x, dtype=float)
        lower = np.minimum(x, TWO_THIRDS)
        upper = 1.0 - np.maximum(x, TWO_THIRDS)
        return np.where(x <= TWO_THIRDS,
                        2.0 * self.P(0.5 * lower),
                        (3.0 * x - 2.0) * self.p(upper) + 2.0 * self.P(upper))

    def median_projection(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < TWO_THIRDS, self.q(np.minimum(x, TWO_THIRDS)),
                        4.0 * self.q(2.0 - 2.0 * np.maximum(x, TWO_THIRDS)))

    # -- sampling helpers ---------------------------------------------------
    def _envelope(self) -> float:
        grid = np.linspace(0.0, THIRD, 1001)
        vals = self.p(grid)
        i = int(np.argmax(vals))
        best = float(vals[i])
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: -float(self.p(t)), bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-12})
            best = max(best, -float(res.fun))
        return best * (1.0 + 1e-6)

    def q_inverse_cdf(self, u):
        return np.interp(u, self._q_cdf, self._q_knots)


@lru_cache(maxsize=8)
def triangle_densities(k: ModelConstants) -> TriangleDensities:
    """Shared, immutable :class:`TriangleDensities` for ``k``."""
    return TriangleDensities(k)


def density_p(x, k: ModelConstants):
    """Layered generator ``p`` on ``[0, 1/3]``; at ``1/3`` this is ``f'(2/3)``."""
    arr = _check_range(x, 0.0, THIRD, "x")
    return _out(triangle_densities(k).p(arr))


def capital_P(x, k: ModelConstants):
    """``P(x) = int_0^x p``, the solution of the first-order ODE with ``P(0) = 0``."""
    arr = _check_range(x, 0.0, THIRD, "x")
    return _out(triangle_densities(k).P(arr))


def density_q(w, k: ModelConstants):
    """Median generator ``q(w) = f(w) - 2 P(w/2)`` on ``[0, 2/3]``."""
    arr = _check_range(w, 0.0, TWO_THIRDS, "w")
    return _out(triangle_densities(k).q(arr))


def target_density(u, k: ModelConstants):
    arr = _check_range(u, 0.0, 1.0, "u")
    return _out(triangle_densities(k).f(arr))


def diffur_residual(x, k: ModelConstants):
    """Residual of ``4(f(2x) - 2P) = f(1-x) - (1-3x) p - 2P``; zero in exact arithmetic."""
    arr = _check_range(x, 0.0, THIRD, "x")
    d = triangle_densities(k)
    P = d.P(arr)
    lhs = 4.0 * (d.f(2.0 * arr) - 2.0 * P)
    rhs = d.f(1.0 - arr) - (1.0 - 3.0 * arr) * d.p(arr) - 2.0 * P
    return _out(lhs - rhs)


def layered_projection_density(x, k: ModelConstants):
    arr = _check_range(x, 0.0, 1.0, "x")
    return _out(triangle_densities(k).layered_projection(arr))


def median_projection_density(x, k: ModelConstants):
    arr = _check_range(x, 0.0, 1.0, "x")
    return _out(triangle_densities(k).median_projection(arr))


def _to_cube(tri: np.ndarray, k: ModelConstants) -> np.ndarray:
    return k.l * np.power(k.alpha, tri)


def triangle_to_cube(u: float, v: float, w: float, k: ModelConstants) -> Tuple[float, float, float]:
    """Map a triangle point (``u + v + w = 2``) onto ``M_2``."""
    if abs(u + v + w - 2.0) >= 1e-9:
        raise DomainError(f"barycentric constraint violated: u+v+w = {u + v + w!r}")
    for val in (u, v, w):
        if not -1e-12 <= val <= 1.0 + 1e-12:
            raise DomainError(f"triangle coordinate {val!r} outside [0, 1]")
    x, y, z = _to_cube(np.array([u, v, w], dtype=float), k)
    return float(x), float(y), float(z)


@dataclass
class PointCloud:
    """Equally weighted samples of a coupling on the unit cube."""

    points: np.ndarray
    components: np.ndarray
    seed: int
    labels: Tuple[str, ...] = field(default=COMPONENTS)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.components = np.asarray(self.components, dtype=np.int8)
        if len(self.components) != len(self.points):
            raise ValueError("one component tag per point is required")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def weights(self) -> np.ndarray:
        n = len(self.points)
        return np.full(n, 1.0 / n) if n else np.zeros(0)

    @property
    def tags(self) -> list:
        return [self.labels[c] for c in self.components]


def _sample_layered(count: int, rng: np.random.Generator, dens: TriangleDensities) -> np.ndarray:
    out = np.empty((count, 3))
    filled = 0
    proposed = accepted = 0
    rate = 0.5
    while filled < count:
        need = count - filled
        batch = int(need / rate * 1.1) + 64
        u = rng.random(batch)
        v = rng.random(batch)
        flip = u + v < 1.0
        u[flip] = 1.0 - u[flip]
        v[flip] = 1.0 - v[flip]
        level = np.minimum(np.minimum(1.0 - u, 1.0 - v), u + v - 1.0)
        keep = rng.random(batch) * dens.p_envelope < dens.p(level)
        proposed += batch
        accepted += int(keep.sum())
        if proposed >= 10_000 and accepted < MIN_ACCEPTANCE * proposed:
            raise SamplerStallError(
                f"layered rejection sampler accepted {accepted} of {proposed} proposals")
        rate = max(accepted / proposed, MIN_ACCEPTANCE)
        take = min(int(keep.sum()), need)
        uu, vv = u[keep][:take], v[keep][:take]
        out[filled:filled + take, 0] = uu
        out[filled:filled + take, 1] = vv
        out[filled:filled + take, 2] = 2.0 - uu - vv
        filled += take
    return out


def _sample_median(count: int, rng: np.random.Generator, dens: TriangleDensities) -> np.ndarray:
    w = dens.q_inverse_cdf(rng.random(count))
    which = rng.integers(0, 3, size=count)
    tri = np.repeat((1.0 - 0.5 * w)[:, None], 3, axis=1)
    tri[np.arange(count), which] = w
    return tri


def sample_primal(n: int, seed: int, k: ModelConstants) -> PointCloud:
    """Draw ``n`` i.i.d. points from the explicit primal solution.

    Each point first picks a component with probabilities
    ``(3l, mass_layered, mass_median)``.  Segment points take ``t`` uniform
    on ``[0, l]`` and a uniformly chosen segment; layered points come from
    rejection sampling on the projected triangle; median points use the
    inverse-CDF table of ``q`` and a uniformly chosen median.

    Raises
    ------
    SamplerStallError
        If the layered acceptance rate drops below ``1e-4``.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n!r}")
    dens = triangle_densities(k)
    rng = np.random.default_rng(seed)
    probs = np.array([3.0 * k.l, dens.mass_layered, dens.mass_median])
    probs /= probs.sum()
    kind = rng.choice(3, size=n, p=probs)

    points = np.empty((n, 3))
    comps = np.empty(n, dtype=np.int8)

    seg = np.flatnonzero(kind == 0)
    t = rng.uniform(0.0, k.l, size=len(seg))
    axis = rng.integers(0, 3, size=len(seg))
    seg_pts = np.repeat((1.0 - 2.0 * t)[:, None], 3, axis=1)
    seg_pts[np.arange(len(seg)), axis] = t
    points[seg] = seg_pts
    comps[seg] = axis

    lay = np.flatnonzero(kind == 1)
    points[lay] = _to_cube(_sample_layered(len(lay), rng, dens), k)
    comps[lay] = LAYERED

    med = np.flatnonzero(kind == 2)
    points[med] = _to_cube(_sample_median(len(med), rng, dens), k)
    comps[med] = MEDIAN

    np.clip(points, 0.0, 1.0, out=points)
    return PointCloud(points=points, components=comps, seed=seed)


def estimate_cost(cloud: PointCloud) -> Tuple[float, float]:
    """Sample mean of ``xyz`` over the cloud and its standard error."""
    n = len(cloud)
    if n == 0:
        raise ValueError("cannot estimate the cost of an empty cloud")
    prod = np.prod(cloud.points, axis=1)
    if n == 1:
        return float(prod[0]), 0.0
    return float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n))


def cloud_residuals(cloud: PointCloud, k: ModelConstants) -> np.ndarray:
    return support_residuals(cloud.points, k)


def density_table(grid: int, k: ModelConstants) -> dict:
    """Tabulate every density on ``grid + 1`` equispaced points of ``[0, 1]``.

    Entries outside a function's domain are ``nan``.
    """
    if grid < 1:
        raise DomainError(f"grid must be at least 1, got {grid!r}")
    d = triangle_densities(k)
    t = np.linspace(0.0, 1.0, grid + 1)
    in_p = t <= THIRD
    in_q = t <= TWO_THIRDS
    tp = np.where(in_p, t, 0.0)
    tq = np.where(in_q, t, 0.0)
    return {
        "t": t,
        "p": np.where(in_p, d.p(tp), np.nan),
        "P": np.where(in_p, d.P(tp), np.nan),
        "q": np.where(in_q, d.q(tq), np.nan),
        "f": d.f(t),
        "p_star": d.layered_projection(t),
        "q_star": d.median_projection(t),
    }
