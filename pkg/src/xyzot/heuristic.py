"""Swap-based and sorting-based monotonization of sampled couplings.

Both algorithms start from independent samples of the three marginals and
only ever permute coordinate values between triples, so the three
per-axis multisets are invariant.

* :func:`run_general` picks random pairs and applies the first coordinate
  swap that strictly lowers the cost (any cost ``C(xyz)``).
* :func:`run_sorting` is specific to ``xyz``: sort by one coordinate and
  reassign the other two as pairs so that their products descend.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .dual import CostProfile, IDENTITY
from .errors import DomainError, InvariantViolation

AXES = ("x", "y", "z")
WITNESS_TOL = 1e-12
_CHUNK = 1 << 18


@dataclass
class CouplingState:
    """An ordered list of triples plus run bookkeeping."""

    triples: np.ndarray
    pass_count: int = 0
    converged: bool = False
    status: str = "initial"
    swaps: int = 0

    def __post_init__(self):
        self.triples = np.array(self.triples, dtype=float).reshape(-1, 3)

    def __len__(self):
        return len(self.triples)

    def total_cost(self, cost: CostProfile = IDENTITY) -> float:
        return float(np.sum(cost.evaluate(np.prod(self.triples, axis=1))))

    def mean_cost(self, cost: CostProfile = IDENTITY) -> float:
        return self.total_cost(cost) / len(self.triples)


@dataclass(frozen=True)
class MarginalSpec:
    """Piecewise-constant density given by ``edges`` and one value per piece."""

    kind: str
    edges: Tuple[float, ...]
    densities: Tuple[float, ...]

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        dens = np.asarray(self.densities, dtype=float)
        if len(edges) != len(dens) + 1 or len(dens) == 0:
            raise DomainError("need exactly one density value per interval")
        if np.any(np.diff(edges) <= 0):
            raise DomainError("edges must be strictly increasing")
        if np.any(dens < 0):
            raise DomainError("density must be nonnegative")
        mass = float(np.sum(dens * np.diff(edges)))
        if abs(mass - 1.0) > 1e-9:
            raise DomainError(f"density integrates to {mass!r}, not 1")

    @classmethod
    def uniform01(cls) -> "MarginalSpec":
        return cls("uniform01", (0.0, 1.0), (1.0,))

    @classmethod
    def sf(cls) -> "MarginalSpec":
        lo, hi = 1.0 / 15.0, 2.0 / 5.0
        return cls("sf", (0.0, 1.0, 2.0, 3.0, 4.0, 5.0), (lo, hi, lo, hi, lo))

    @classmethod
    def table(cls, edges: Sequence[float], densities: Sequence[float]) -> "MarginalSpec":
        return cls("table", tuple(float(e) for e in edges), tuple(float(d) for d in densities))

    def inverse_cdf(self, u):
        edges = np.asarray(self.edges)
        dens = np.asarray(self.densities)
        cum = np.concatenate([[0.0], np.cumsum(dens * np.diff(edges))])
        cum /= cum[-1]
        idx = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(dens) - 1)
        d = dens[idx]
        step = np.where(d > 0, (u - cum[idx]) / np.where(d > 0, d, 1.0), 0.0)
        return np.minimum(edges[idx] + step, edges[idx + 1])


MARGINALS = {"uniform": MarginalSpec.uniform01, "uniform01": MarginalSpec.uniform01,
             "sf": MarginalSpec.sf}


def sample_marginal(spec: MarginalSpec, n: int, seed: int) -> np.ndarray:
    """``n`` i.i.d. draws by inverting the piecewise-linear CDF."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    rng = np.random.default_rng(seed)
    return spec.inverse_cdf(rng.random(n))


def initial_state(n: int, seed: int, spec: Optional[MarginalSpec] = None) -> CouplingState:
    """Independent samples of the three marginals, zipped into triples."""
    spec = spec or MarginalSpec.uniform01()
    rng = np.random.default_rng(seed)
    cols = spec.inverse_cdf(rng.random((3, n)))
    return CouplingState(np.ascontiguousarray(cols.T))


# -- pairwise swap checks -----------------------------------------------------

def _swap_gains_general(a, b, C):
    """Cost decrease of each of the three swaps between triples ``a`` and ``b``."""
    base = C(a[0] * a[1] * a[2]) + C(b[0] * b[1] * b[2])
    return (
        base - (C(b[0] * a[1] * a[2]) + C(a[0] * b[1] * b[2])),
        base - (C(a[0] * b[1] * a[2]) + C(b[0] * a[1] * b[2])),
        base - (C(a[0] * a[1] * b[2]) + C(b[0] * b[1] * a[2])),
    )


def _witness_general(tr: np.ndarray, cost: CostProfile, tol: float):
    C = cost.evaluate
    n = len(tr)
    for i in range(n - 1):
        a = tr[i]
        b = tr[i + 1:].T
        gains = _swap_gains_general(a[:, None], b, C)
        hit = (gains[0] > tol) | (gains[1] > tol) | (gains[2] > tol)
        if hit.any():
            off = int(np.argmax(hit))
            axis = next(ax for ax in range(3) if gains[ax][off] > tol)
            return i, i + 1 + off, axis
    return -1, -1, -1


def _sweep_general(x, y, z, pi, pj, max_swaps, tol, cost):
    C = lambda t: float(cost.evaluate(t))
    cols = (x, y, z)
    swaps = 0
    for k in range(len(pi)):
        if swaps >= max_swaps:
            return swaps, k
        i, j = int(pi[k]), int(pj[k])
        if i == j:
            continue
        a = (x[i], y[i], z[i])
        b = (x[j], y[j], z[j])
        gains = _swap_gains_general(a, b, C)
        for ax in range(3):
            if gains[ax] > tol:
                col = cols[ax]
                col[i], col[j] = col[j], col[i]
                swaps += 1
                break
    return swaps, len(pi)


def _witness(x, y, z, cost: CostProfile, tol: float):
    if cost.is_identity:
        return kernels.get().witness_product(x, y, z, tol)
    return _witness_general(np.stack([x, y, z], axis=1), cost, tol)


def monotonicity_witness(state: CouplingState, cost: CostProfile = IDENTITY,
                         tol: float = WITNESS_TOL):
    """First pair and axis whose coordinate swap lowers the cost by more than ``tol``.

    Pairs are scanned as ``(i, j)`` with ``i < j`` in lexicographic order and
    the axes in the order x, y, z.

    Returns
    -------
    ((i, j), axis) or None
    """
    tr = state.triples
    if len(tr) < 2:
        return None
    x, y, z = (np.ascontiguousarray(tr[:, a]) for a in range(3))
    i, j, ax = _witness(x, y, z, cost, tol)
    if ax < 0:
        return None
    return (int(i), int(j)), AXES[ax]


def run_general(state: CouplingState, cost: CostProfile = IDENTITY, max_swaps: int = 10**7,
                rng: Optional[np.random.Generator] = None, tol: float = WITNESS_TOL,
                debug: bool = False) -> CouplingState:
    """Random pairwise swaps until no improving swap exists or the budget ends.

    One sweep draws ``n^2`` pairs uniformly with replacement.  After a sweep
    without swaps, a deterministic scan of all pairs either finds a witness
    (applied, and the run continues) or certifies convergence.  With
    ``debug`` pairs are processed one at a time and the total cost is checked
    to be non-increasing after each step.
    """
    if max_swaps < 0:
        raise DomainError("max_swaps must be nonnegative")
    rng = rng if rng is not None else np.random.default_rng(0)
    n = len(state)
    x, y, z = (np.ascontiguousarray(state.triples[:, a]) for a in range(3))
    if n < 2:
        return replace(state, triples=state.triples.copy(), converged=True, status="converged")

    if cost.is_identity:
        sweep = lambda pi, pj, budget: kernels.get().sweep_product(x, y, z, pi, pj, budget, tol)
    else:
        sweep = lambda pi, pj, budget: _sweep_general(x, y, z, pi, pj, budget, tol, cost)

    chunk = 1 if debug else _CHUNK
    last_cost = float(np.sum(cost.evaluate(x * y * z))) if debug else None
    swaps = 0
    sweeps = 0
    status = "budget"
    converged = False
    while swaps < max_swaps:
        sweep_swaps = 0
        remaining = n * n
        while remaining > 0 and swaps < max_swaps:
            m = min(remaining, chunk)
            pi = rng.integers(0, n, size=m, dtype=np.int64)
            pj = rng.integers(0, n, size=m, dtype=np.int64)
            done, _ = sweep(pi, pj, max_swaps - swaps)
            swaps += done
            sweep_swaps += done
            remaining -= m
            if debug:
                now = float(np.sum(cost.evaluate(x * y * z)))
                if now > last_cost + 1e-12 * n:
                    raise InvariantViolation(f"total cost rose from {last_cost!r} to {now!r}")
                last_cost = now
        sweeps += 1
        if sweep_swaps == 0:
            i, j, ax = _witness(x, y, z, cost, tol)
            if ax < 0:
                converged, status = True, "converged"
                break
            col = (x, y, z)[ax]
            col[i], col[j] = col[j], col[i]
            swaps += 1
    if not converged and _witness(x, y, z, cost, tol)[2] < 0:
        converged, status = True, "converged"
    return CouplingState(np.stack([x, y, z], axis=1), pass_count=sweeps,
                         converged=converged, status=status, swaps=state.swaps + swaps)


def _sort_step(tr: np.ndarray, axis: int) -> np.ndarray:
    a, b = (ax for ax in range(3) if ax != axis)
    out = tr[np.argsort(tr[:, axis], kind="stable")]
    prod = out[:, a] * out[:, b]
    # products descending; ties broken by the pair's first coordinate descending
    order = np.lexsort((-out[:, a], -prod))
    out[:, [a, b]] = out[order][:, [a, b]]
    return out


def sorting_pass(tr: np.ndarray) -> np.ndarray:
    for axis in range(3):
        tr = _sort_step(tr, axis)
    return tr


def run_sorting(state: CouplingState, max_passes: int = 200) -> CouplingState:
    """Cycle sort-and-rearrange steps over the axes until nothing changes.

    Each pass processes the axes x, y, z in turn.  The run ends at a fixpoint
    (``converged``), when a previously seen state recurs (``cycle``), or after
    ``max_passes`` passes.
    """
    tr = state.triples.copy()
    if len(tr) < 2:
        return CouplingState(tr, pass_count=0, converged=True, status="fixpoint")
    seen = set()
    status, converged, passes = "max_passes", False, 0
    for passes in range(1, max_passes + 1):
        new = sorting_pass(tr)
        if np.array_equal(new, tr):
            tr, status, converged = new, "fixpoint", True
            break
        digest = hashlib.blake2b(new.tobytes(), digest_size=16).digest()
        tr = new
        if digest in seen:
            status = "cycle"
            break
        seen.add(digest)
    return CouplingState(tr, pass_count=passes, converged=converged, status=status,
                         swaps=state.swaps)


def weak_monotonicity_violations(state: CouplingState) -> int:
    """Count ordered pairs breaking ``u1 < u2 => (product of the others)1 >= ...2``.

    Full ``O(n^2)`` audit; intended for ``n`` up to a few thousand.
    """
    tr = state.triples
    count = 0
    for axis in range(3):
        a, b = (ax for ax in range(3) if ax != axis)
        u = tr[:, axis]
        prod = tr[:, a] * tr[:, b]
        less = u[:, None] < u[None, :]
        smaller_prod = prod[:, None] < prod[None, :]
        count += int(np.sum(less & smaller_prod))
    return count


def same_marginals(a: CouplingState, b: CouplingState) -> bool:
    """Whether the per-axis value multisets of two states coincide exactly."""
    return all(np.array_equal(np.sort(a.triples[:, ax]), np.sort(b.triples[:, ax]))
               for ax in range(3))
