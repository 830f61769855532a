"""The support set M and the inertia-index dimension bound.

A point ``(x, y, z)`` of the unit cube lies on M exactly when

    lambda(x) = yz,  lambda(y) = xz,  lambda(z) = xy,

where ``lambda`` is the continuous, strictly decreasing piecewise function
implemented by :func:`lambda_of`.  M is the union of three segments
(``M_x``, ``M_y``, ``M_z``) and the surface ``M_2 = {xyz = c} cap [l, r]^3``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .constants import ModelConstants
from .errors import DomainError

AXES = ("x", "y", "z")
DEFAULT_MEMBERSHIP_TOL = 1e-9

Point = Tuple[float, float, float]


def _check_unit(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise DomainError(f"{name} must lie in [0, 1]")
    return arr


def _lambda_unchecked(x: np.ndarray, k: ModelConstants) -> np.ndarray:
    safe = np.where(x > 0.0, x, 1.0)
    return np.where(x < k.l, (1.0 - 2.0 * x) ** 2,
                    np.where(x < k.r, k.c / safe, 0.5 * x * (1.0 - x)))


def lambda_of(x, k: ModelConstants):
    """Evaluate ``lambda`` on ``[0, 1]`` (scalar or array).

    The pieces are ``(1-2x)^2`` on ``[0, l)``, ``c/x`` on ``[l, r)`` and
    ``x(1-x)/2`` on ``[r, 1]``.
    """
    arr = _check_unit(x)
    out = _lambda_unchecked(arr, k)
    return float(out) if out.ndim == 0 else out


def kappa_of(x, k: ModelConstants):
    """Evaluate ``kappa(x) = x * lambda(x)``; equals ``c`` on ``[l, r]``."""
    arr = _check_unit(x)
    out = arr * _lambda_unchecked(arr, k)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SupportResidual:
    rx: float
    ry: float
    rz: float

    @property
    def max_residual(self) -> float:
        return max(self.rx, self.ry, self.rz)

    def on_m(self, tol: float = DEFAULT_MEMBERSHIP_TOL) -> bool:
        return self.max_residual <= tol


def support_residual(x: float, y: float, z: float, k: ModelConstants) -> SupportResidual:
    """Residuals ``|lambda(x) - yz|`` etc. for one point of the unit cube."""
    lx, ly, lz = (lambda_of(v, k) for v in (x, y, z))
    return SupportResidual(abs(lx - y * z), abs(ly - x * z), abs(lz - x * y))


def support_residuals(points, k: ModelConstants) -> np.ndarray:
    """Vectorized max-residual for an ``(N, 3)`` array of cube points."""
    pts = _check_unit(points, "points")
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    rx = np.abs(_lambda_unchecked(x, k) - y * z)
    ry = np.abs(_lambda_unchecked(y, k) - x * z)
    rz = np.abs(_lambda_unchecked(z, k) - x * y)
    return np.maximum(np.maximum(rx, ry), rz)


def param_segment(axis: str, t: float, k: ModelConstants) -> Point:
    """Point of the segment ``M_axis`` with small coordinate ``t in [0, l]``."""
    if axis not in AXES:
        raise DomainError(f"axis must be one of {AXES}, got {axis!r}")
    if not 0.0 <= t <= k.l:
        raise DomainError(f"t must lie in [0, l={k.l}], got {t!r}")
    big = 1.0 - 2.0 * t
    pt = [big, big, big]
    pt[AXES.index(axis)] = t
    return tuple(pt)


def param_m2(x: float, y: float, k: ModelConstants) -> Optional[Point]:
    """Lift ``(x, y) in [l, r]^2`` to the surface ``xyz = c``.

    Returns ``None`` when the required ``z = c / (xy)`` falls outside
    ``[l, r]``; a relative slack of a few ulps absorbs rounding at the corners.
    """
    if not (k.l <= x <= k.r and k.l <= y <= k.r):
        raise DomainError("x and y must lie in [l, r]")
    z = k.c / (x * y)
    slack = 4e-16
    if z < k.l * (1.0 - slack) or z > k.r * (1.0 + slack):
        return None
    return (x, y, min(max(z, k.l), k.r))


@dataclass(frozen=True)
class InertiaReport:
    positive_index: int
    negative_index: int
    zero_index: int

    @property
    def dimension_bound(self) -> int:
        return 3 - self.positive_index


def inertia_matrix(x, y, z, a, b, g) -> np.ndarray:
    """Nonnegative combination ``a g_x + b g_y + g g_z`` of the mixed-Hessian forms."""
    return np.array([
        [0.0, (a + b) * z, (a + g) * y],
        [(a + b) * z, 0.0, (b + g) * x],
        [(a + g) * y, (b + g) * x, 0.0],
    ])


def inertia_index(x, y, z, a, b, g) -> InertiaReport:
    """Signature of the combined form, with a relative zero threshold.

    Eigenvalues below ``1e-12 * max|entry|`` in magnitude count as zero.
    """
    mat = inertia_matrix(x, y, z, a, b, g)
    scale = np.max(np.abs(mat))
    if scale == 0.0:
        return InertiaReport(0, 0, 3)
    eig = np.linalg.eigvalsh(mat)
    thresh = 1e-12 * scale
    pos = int(np.sum(eig > thresh))
    neg = int(np.sum(eig < -thresh))
    return InertiaReport(pos, neg, 3 - pos - neg)
