"""Dual potentials for costs of the form ``c(x, y, z) = C(xyz)``.

For any ``C`` with ``t C'(t)`` strictly increasing the common potential is

    f_hat(s) = int_0^s lambda(t) C'(t lambda(t)) dt,

shifted by offsets ``C_x + C_y + C_z = C(0) - 2 f_hat(1)``.  For ``C(t) = t``
there is also a closed form, :func:`f_explicit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .constants import ModelConstants
from .errors import DomainError
from .geometry import _lambda_unchecked
from .quadrature import CumulativeIntegral, adaptive_quad

QUAD_TOL = 1e-10

Scalar = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CostProfile:
    """A cost ``C`` on ``[0, 1]`` together with its derivative."""

    name: str
    evaluate: Scalar
    derivative: Scalar

    @property
    def is_identity(self) -> bool:
        return self.name == "identity"

    def __call__(self, t):
        return self.evaluate(t)


IDENTITY = CostProfile("identity", lambda t: np.asarray(t, dtype=float) * 1.0,
                       lambda t: np.ones_like(np.asarray(t, dtype=float)))
SQUARE = CostProfile("square", lambda t: np.asarray(t, dtype=float) ** 2,
                     lambda t: 2.0 * np.asarray(t, dtype=float))
EXP = CostProfile("exp", np.exp, np.exp)

COSTS = {c.name: c for c in (IDENTITY, SQUARE, EXP)}


def cost_profile(name: str) -> CostProfile:
    try:
        return COSTS[name]
    except KeyError:
        raise DomainError(f"unknown cost {name!r}; choose from {sorted(COSTS)}") from None


class CostValidation(NamedTuple):
    ok: bool
    message: str
    violation: Optional[Tuple[float, float]] = None


def validate_cost_profile(cost: CostProfile, grid: int = 1001,
                          fd_step: float = 1e-6, fd_rtol: float = 1e-6) -> CostValidation:
    """Check that ``t C'(t)`` strictly increases and that ``C'`` matches ``C``.

    Monotonicity is tested on ``grid`` equispaced points; the derivative by
    central differences at interior points with relative tolerance ``fd_rtol``.
    """
    t = np.linspace(0.0, 1.0, grid)
    u = t * np.asarray(cost.derivative(t), dtype=float)
    bad = np.flatnonzero(np.diff(u) <= 0.0)
    if bad.size:
        i = int(bad[0])
        return CostValidation(
            False, f"t*C'(t) not strictly increasing between t={t[i]:.6g} and t={t[i + 1]:.6g}",
            (float(t[i]), float(t[i + 1])))
    inner = t[1:-1]
    fd = (cost.evaluate(inner + fd_step) - cost.evaluate(inner - fd_step)) / (2.0 * fd_step)
    exact = cost.derivative(inner)
    err = np.abs(fd - exact) / np.maximum(1.0, np.abs(exact))
    j = int(np.argmax(err))
    if err[j] > fd_rtol:
        return CostValidation(
            False, f"C' disagrees with finite differences of C at t={inner[j]:.6g} "
                   f"(relative error {err[j]:.3e})", (float(inner[j]), float(inner[j])))
    return CostValidation(True, "ok")


def _integrand(cost: CostProfile, k: ModelConstants) -> Scalar:
    def phi(t):
        t = np.asarray(t, dtype=float)
        lam = _lambda_unchecked(t, k)
        return lam * cost.derivative(t * lam)
    return phi


@lru_cache(maxsize=16)
def _cumulative(cost: CostProfile, k: ModelConstants) -> CumulativeIntegral:
    return CumulativeIntegral(_integrand(cost, k), 0.0, 1.0,
                              breakpoints=(k.l, k.r), abs_tol=QUAD_TOL * 1e-3)


def f_hat(s, cost: CostProfile, k: ModelConstants):
    """The potential ``f_hat(s)`` on ``[0, 1]`` (scalar or array)."""
    arr = np.asarray(s, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("s must lie in [0, 1]")
    return _cumulative(cost, k)(arr)


def f_hat_adaptive(s: float, cost: CostProfile, k: ModelConstants,
                   abs_tol: float = QUAD_TOL) -> float:
    """Single-point ``f_hat(s)`` by adaptive quadrature, split at ``l`` and ``r``."""
    if not 0.0 <= s <= 1.0:
        raise DomainError("s must lie in [0, 1]")
    return adaptive_quad(_integrand(cost, k), 0.0, s, breakpoints=(k.l, k.r), abs_tol=abs_tol)


def f_explicit(x, k: ModelConstants):
    """Closed-form dual potential for ``C(t) = t``; its derivative is ``lambda``."""
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError("x must lie in [0, 1]")
    l, r, c = k.l, k.r, k.c
    base = -(c * math.log(c) - c) / 3.0
    f1 = c * math.log(l) + base + ((2.0 * arr - 1.0) ** 3 - (2.0 * l - 1.0) ** 3) / 6.0
    f2 = c * np.log(np.where(arr > 0.0, arr, 1.0)) + base
    f3 = (c * math.log(r) + base + (arr ** 2 - r ** 2) / 4.0 - (arr ** 3 - r ** 3) / 6.0)
    out = np.where(arr <= l, f1, np.where(arr <= r, f2, f3))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DualTriple:
    """Potentials ``potential(x) + offsets[i]`` for the three coordinates."""

    cost: CostProfile
    potential: Scalar
    offsets: Tuple[float, float, float]
    integral: float

    def value(self) -> float:
        """Dual objective ``sum_i int_0^1 (potential + offset_i)``."""
        return 3.0 * self.integral + sum(self.offsets)


def offset_sum(cost: CostProfile, k: ModelConstants) -> float:
    return float(cost.evaluate(0.0)) - 2.0 * float(f_hat(1.0, cost, k))


def make_dual(cost: CostProfile, k: ModelConstants,
              offsets: Optional[Tuple[float, float, float]] = None) -> DualTriple:
    """Dual triple from ``f_hat``; offsets default to the symmetric split.

    ``int_0^1 f_hat`` is computed as ``int_0^1 (1 - t) phi(t) dt`` with
    ``phi`` the integrand of ``f_hat``.
    """
    total = offset_sum(cost, k)
    if offsets is None:
        offsets = (total / 3.0,) * 3
    elif abs(sum(offsets) - total) > 1e-9:
        raise DomainError(f"offsets must sum to {total!r}, got {sum(offsets)!r}")
    phi = _integrand(cost, k)
    integral = adaptive_quad(lambda t: (1.0 - t) * phi(t), 0.0, 1.0,
                             breakpoints=(k.l, k.r), abs_tol=QUAD_TOL * 1e-2)
    pot = lambda s, _c=cost, _k=k: f_hat(s, _c, _k)
    return DualTriple(cost=cost, potential=pot, offsets=tuple(float(o) for o in offsets),
                      integral=integral)


def explicit_dual(k: ModelConstants) -> DualTriple:
    """The closed-form triple ``f = g = h = f_explicit`` for ``C(t) = t``."""
    integral = adaptive_quad(lambda t: f_explicit(t, k), 0.0, 1.0,
                             breakpoints=(k.l, k.r), abs_tol=1e-13)
    return DualTriple(cost=IDENTITY, potential=lambda s: f_explicit(s, k),
                      offsets=(0.0, 0.0, 0.0), integral=integral)


def feasibility_margin(x, y, z, dual: DualTriple):
    """``C(xyz) - sum_i (potential(x_i) + offset_i)``; never negative for a feasible dual."""
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    cx, cy, cz = dual.offsets
    total = (dual.potential(x) + cx) + (dual.potential(y) + cy) + (dual.potential(z) + cz)
    out = dual.cost.evaluate(x * y * z) - total
    return float(out) if np.ndim(out) == 0 else out


def primal_cost(cost: CostProfile, k: ModelConstants) -> float:
    """``int C(xyz) dmu`` for any (3,1)-stochastic ``mu`` supported on M.

    Three segment integrals ``int_0^l C(t (1-2t)^2) dt`` plus ``C(c) (r - l)``
    from the surface part, where ``xyz`` is constant.
    """
    seg = adaptive_quad(lambda t: cost.evaluate(t * (1.0 - 2.0 * t) ** 2), 0.0, k.l,
                        abs_tol=1e-13)
    return 3.0 * seg + float(cost.evaluate(k.c)) * (k.r - k.l)


class GapReport(NamedTuple):
    primal: float
    dual: float
    gap: float


def duality_report(cost: CostProfile, k: ModelConstants) -> GapReport:
    primal = primal_cost(cost, k)
    dual = make_dual(cost, k).value()
    return GapReport(primal, dual, abs(dual - primal))


def duality_gap(cost: CostProfile, k: ModelConstants) -> float:
    """``|dual value - primal value|``, computed from independent integrals."""
    return duality_report(cost, k).gap


def on_m_partner(t, k: ModelConstants) -> np.ndarray:
    """A point of M whose first coordinate is ``t`` (vectorized)."""
    t = np.asarray(t, dtype=float)
    seg = 1.0 - 2.0 * np.minimum(t, k.l)
    mid = np.sqrt(k.c / np.clip(t, k.l, k.r))
    hi_y = 0.5 * (1.0 - np.maximum(t, k.r))
    y = np.where(t <= k.l, seg, np.where(t <= k.r, mid, hi_y))
    z = np.where(t <= k.l, seg, np.where(t <= k.r, mid, t))
    return np.stack([t, y, z], axis=-1)


def dual_table(cost: CostProfile, grid: int, k: ModelConstants) -> dict:
    """Tabulate ``f_hat``, the shifted potential and margins on and off M."""
    if grid < 1:
        raise DomainError(f"grid must be at least 1, got {grid!r}")
    dual = make_dual(cost, k)
    t = np.linspace(0.0, 1.0, grid + 1)
    fh = f_hat(t, cost, k)
    m = on_m_partner(t, k)
    return {
        "t": t,
        "f_hat": fh,
        "potential": fh + dual.offsets[0],
        "margin_on_m": feasibility_margin(m[:, 0], m[:, 1], m[:, 2], dual),
        "margin_diagonal": feasibility_margin(t, t, t, dual),
    }
