"""The transcendental constants of the xyz-cost transport problem.

Everything downstream is parametrized by a single number ``l``, the unique
root of ``h(l) = 9l + ln(1 - 2l) - ln(l) - 3`` on ``(0, 1/6)``.  From it

    r = 1 - 2l,   alpha = r / l,   c = l r^2,

and the optimal cost of the primal problem has the closed form

    C_P = 3 * int_0^l x (1 - 2x)^2 dx + l r^2 (r - l).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import ConvergenceError, DomainError

#: Bracket used by :func:`solve_constants`; ``h`` is positive at the left end
#: and negative at the right end.
BRACKET = (1e-6, 1.0 / 6.0 - 1e-6)


@dataclass(frozen=True)
class ModelConstants:
    """Solved scalars shared by every module.

    Attributes
    ----------
    l : float
        Root of :func:`h_residual` in ``(0, 1/6)``.
    r : float
        ``1 - 2 l``.
    alpha : float
        ``r / l``.
    c : float
        ``l r^2``, the constant value of ``xyz`` on the two-dimensional part
        of the support.
    primal_value : float
        Optimal primal cost ``C_P``.
    """

    l: float
    r: float
    alpha: float
    c: float
    primal_value: float

    @classmethod
    def from_l(cls, l: float) -> "ModelConstants":
        if not 0.0 < l < 0.5:
            raise DomainError(f"l must lie in (0, 1/2), got {l!r}")
        r = 1.0 - 2.0 * l
        return cls(l=l, r=r, alpha=r / l, c=l * r * r,
                   primal_value=_primal_value(l, r))

    @property
    def log_alpha(self) -> float:
        return math.log(self.alpha)

    def as_dict(self) -> dict:
        return {"l": self.l, "r": self.r, "alpha": self.alpha, "c": self.c,
                "primal_value": self.primal_value}


def h_residual(l: float) -> float:
    """Return ``9l + ln(1 - 2l) - ln(l) - 3``.

    Raises
    ------
    DomainError
        If ``l`` is not in the open interval ``(0, 1/2)``.
    """
    if not 0.0 < l < 0.5:
        raise DomainError(f"h is defined on (0, 1/2), got l={l!r}")
    return 9.0 * l + math.log1p(-2.0 * l) - math.log(l) - 3.0


def h_derivative(l: float) -> float:
    if not 0.0 < l < 0.5:
        raise DomainError(f"h is defined on (0, 1/2), got l={l!r}")
    return 9.0 - 2.0 / (1.0 - 2.0 * l) - 1.0 / l


def _primal_value(l: float, r: float) -> float:
    # int_0^l x(1-2x)^2 dx expanded
    segment = l * l / 2.0 - 4.0 * l ** 3 / 3.0 + l ** 4
    return 3.0 * segment + l * r * r * (r - l)


def primal_value_closed_form(k) -> float:
    """Optimal primal cost computed from ``k.l`` and ``k.r`` alone."""
    return _primal_value(k.l, k.r)


def _find_root(tolerance: float, max_iter: int = 200) -> float:
    lo, hi = BRACKET
    h_lo, h_hi = h_residual(lo), h_residual(hi)
    if not (h_lo > 0.0 > h_hi):
        raise ConvergenceError(
            f"no sign change of h on [{lo}, {hi}]: h={h_lo}, {h_hi}")

    # bisection down to a width where Newton is safe
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if h_residual(mid) > 0.0:
            lo = mid
        else:
            hi = mid

    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        hx = h_residual(x)
        if hx > 0.0:
            lo = x
        else:
            hi = x
        step = hx / h_derivative(x)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x or abs(x_new - x) <= 4.0 * math.ulp(x):
            x = x_new
            break
        x = x_new

    if not abs(h_residual(x)) < tolerance:
        raise ConvergenceError(
            f"|h(l)| = {abs(h_residual(x)):.3e} not below tolerance {tolerance:.3e}")
    return x


def solve_constants(tolerance: float = 1e-12) -> ModelConstants:
    """Solve for ``l`` and derive all model constants.

    Bisection on :data:`BRACKET` followed by safeguarded Newton polishing.

    Parameters
    ----------
    tolerance : float
        Required bound on ``|h(l)|``; must be positive.
    """
    if not tolerance > 0.0:
        raise DomainError(f"tolerance must be positive, got {tolerance!r}")
    return ModelConstants.from_l(_find_root(tolerance))


@lru_cache(maxsize=None)
def default_constants() -> ModelConstants:
    """Constants solved at tolerance ``1e-12``; computed once per process."""
    return solve_constants(1e-12)
