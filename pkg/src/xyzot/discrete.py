"""Discrete triple partitions of ``{1..n}^3`` and their connection to the continuum.

Three copies of ``{1, ..., n}`` are split into ``n`` triples ``(a, b, c)``
and ``sum a*b*c`` is minimized.  The minimum grows like ``C_P n^4`` where
``C_P`` is the continuous optimal value.  This module provides

* an exhaustive oracle for ``n <= 7`` and a sorting heuristic for larger ``n``,
* the constructive route from the continuous measure to a partition
  (box masses, integer box counts, index sweeps),
* the multi-sequence rearrangement check.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .constants import ModelConstants, default_constants
from .errors import ConvergenceError, DomainError, InvalidPartitionError, SizeLimitError
from .heuristic import CouplingState, run_sorting
from .primal import sample_primal

BRUTE_FORCE_MAX_N = 7


class RepairFailure(ConvergenceError):
    """Fiber sums could not be repaired within the iteration budget."""


@dataclass(frozen=True)
class TriplePartition:
    """``n`` integer triples whose columns are each a permutation of ``1..n``."""

    triples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "triples", arr)
        self.validate()

    @property
    def n(self) -> int:
        return len(self.triples)

    def validate(self):
        expected = np.arange(1, self.n + 1)
        for ax in range(3):
            if not np.array_equal(np.sort(self.triples[:, ax]), expected):
                raise InvalidPartitionError(
                    f"column {ax} is not a permutation of 1..{self.n}")

    @classmethod
    def from_permutations(cls, sigma: Sequence[int], tau: Sequence[int]) -> "TriplePartition":
        n = len(sigma)
        return cls(np.column_stack([np.arange(1, n + 1), sigma, tau]))


@dataclass(frozen=True)
class BoxCounts:
    """Integer counts ``t[i, j, k]`` with every axis fiber summing to ``m``."""

    t: np.ndarray
    m: int

    def __post_init__(self):
        arr = np.asarray(self.t)
        if arr.ndim != 3 or len(set(arr.shape)) != 1:
            raise DomainError("counts must be an n x n x n array")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise DomainError("counts must be integers")
        object.__setattr__(self, "t", arr.astype(np.int64))
        self.validate()

    @property
    def n(self) -> int:
        return self.t.shape[0]

    def fiber_sums(self):
        return tuple(self.t.sum(axis=tuple(a for a in range(3) if a != ax)) for ax in range(3))

    def validate(self):
        if self.m < 1:
            raise DomainError("m must be at least 1")
        if np.any(self.t < 0):
            raise DomainError("counts must be nonnegative")
        for ax, sums in enumerate(self.fiber_sums()):
            bad = np.flatnonzero(sums != self.m)
            if bad.size:
                raise InvalidPartitionError(
                    f"axis {ax} fiber {int(bad[0]) + 1} sums to {int(sums[bad[0]])}, not {self.m}")


def partition_cost(p: TriplePartition) -> int:
    """``sum a*b*c`` over the triples, in exact integer arithmetic."""
    p.validate()
    return int(sum(int(a) * int(b) * int(c) for a, b, c in p.triples))


def normalized_cost(p: TriplePartition) -> Fraction:
    """``S_0 / n^4`` as an exact fraction.

    Each triple ``(a, b, c)`` stands for the point ``(a/n, b/n, c/n)`` with
    mass ``1/n``, so this is the cost of the associated discrete measure.
    """
    return Fraction(partition_cost(p), p.n ** 4)


def _permutation_table(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64).reshape(-1, n)


def brute_force_min(n: int, threads: Optional[int] = None) -> Tuple[int, TriplePartition]:
    """Exact minimum over all ``(sigma, tau)`` with triples ``(i, sigma(i), tau(i))``.

    The first coordinate is fixed to the identity without loss of
    generality.  Ties resolve to the lexicographically smallest
    ``(sigma, tau)``.  The outer permutation is split into fixed chunks that
    may run on ``threads`` worker threads; the result does not depend on it.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if n > BRUTE_FORCE_MAX_N:
        raise SizeLimitError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got n = {n}")
    perms = _permutation_table(n)
    rows = len(perms)
    kern = kernels.get()
    chunks = max(1, min(rows, 64))
    bounds = np.linspace(0, rows, chunks + 1).astype(int)
    tasks = [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    workers = max(1, threads or os.cpu_count() or 1)
    if workers == 1:
        results = [kern.brute_force_range(perms, a, b) for a, b in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda ab: kern.brute_force_range(perms, *ab), tasks))
    best, s, t = min(r for r in results if r[0] is not None)
    return int(best), TriplePartition.from_permutations(perms[s], perms[t])


def heuristic_min(n: int, seed: int, restarts: int = 10,
                  max_passes: int = 200) -> Tuple[int, TriplePartition]:
    """Best sorting-heuristic partition over ``restarts`` random starts."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if restarts < 1:
        raise DomainError("restarts must be at least 1")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        start = np.column_stack([rng.permutation(n) + 1 for _ in range(3)]).astype(float)
        final = run_sorting(CouplingState(start), max_passes=max_passes)
        part = TriplePartition(np.rint(final.triples).astype(np.int64))
        cost = partition_cost(part)
        if best is None or cost < best[0]:
            best = (cost, part)
    return best


# -- constructive partition ---------------------------------------------------

def box_masses(n: int, samples: int, seed: int,
               k: Optional[ModelConstants] = None) -> np.ndarray:
    """Monte Carlo estimate of the primal mass of each box ``I_ijk``.

    Boxes are ``[(i-1)/n, i/n) x ...`` (the last one closed).  The result is
    normalized to total mass 1.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if samples < 1:
        raise DomainError("samples must be positive")
    cloud = sample_primal(samples, seed, k or default_constants())
    idx = np.minimum((cloud.points * n).astype(np.int64), n - 1)
    flat = np.ravel_multi_index(idx.T, (n, n, n))
    counts = np.bincount(flat, minlength=n ** 3).reshape(n, n, n)
    return counts / counts.sum()


def _fiber(arr, ax):
    return arr.sum(axis=tuple(a for a in range(3) if a != ax))


def _ipf(R: np.ndarray, target: float, tol: float = 1e-13, max_iter: int = 2000) -> np.ndarray:
    R = R.copy()
    shape = [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]
    for _ in range(max_iter):
        for ax in range(3):
            s = _fiber(R, ax)
            scale = np.where(s > 0, target / np.where(s > 0, s, 1.0), 1.0)
            R *= scale.reshape(shape[ax])
        err = max(np.max(np.abs(_fiber(R, ax) - target)) for ax in range(3))
        if err < tol * max(target, 1.0):
            break
    return R


def integerize(rho: np.ndarray, m: int, max_steps: Optional[int] = None) -> BoxCounts:
    """Round ``nm * rho`` to integer counts whose axis fibers all sum to ``m``.

    Proportional fitting first moves the real array onto the fiber
    constraints; flooring leaves only deficits (or excesses, if fitting
    stalled).  Excess fibers are reduced at the cell with the largest
    rounding surplus, then deficits are filled one unit at a time at the
    cell, among those whose three fibers are all short, with the largest
    remaining fractional part.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 3 or len(set(rho.shape)) != 1:
        raise DomainError("masses must be an n x n x n array")
    if m < 1:
        raise DomainError("m must be at least 1")
    if np.any(rho < 0) or abs(rho.sum() - 1.0) > 1e-9:
        raise DomainError("masses must be nonnegative and sum to 1")
    n = rho.shape[0]
    R = _ipf(rho * (n * m), float(m))
    t = np.floor(R + 1e-9).astype(np.int64)
    budget = max_steps if max_steps is not None else 4 * n ** 3 * m + 100
    steps = 0
    shape = [(-1, 1, 1), (1, -1, 1), (1, 1, -1)]

    while True:
        excess = [_fiber(t, ax) - m for ax in range(3)]
        over = [(ax, int(np.argmax(e))) for ax, e in enumerate(excess) if e.max() > 0]
        if not over:
            break
        ax, f = over[0]
        plane = np.take(t, f, axis=ax)
        surplus = np.where(plane > 0, plane - np.take(R, f, axis=ax), -np.inf)
        cell = list(np.unravel_index(int(np.argmax(surplus)), plane.shape))
        cell.insert(ax, f)
        t[tuple(cell)] -= 1
        steps += 1
        if steps > budget:
            raise RepairFailure(f"excess on axis {ax} fiber {f + 1} not resolved")

    while True:
        deficit = [m - _fiber(t, ax) for ax in range(3)]
        if all(d.max() == 0 for d in deficit):
            break
        open_cells = np.ones_like(t, dtype=bool)
        for ax in range(3):
            open_cells &= (deficit[ax] > 0).reshape(shape[ax])
        if not open_cells.any():
            ax = next(a for a in range(3) if deficit[a].max() > 0)
            raise RepairFailure(
                f"axis {ax} fiber {int(np.argmax(deficit[ax])) + 1} cannot be filled")
        gain = np.where(open_cells, R - t, -np.inf)
        t[np.unravel_index(int(np.argmax(gain)), t.shape)] += 1
        steps += 1
        if steps > budget:
            raise RepairFailure("deficit fill exceeded the step budget")
    return BoxCounts(t, m)


def _sweep_starts(t: np.ndarray, axis: int) -> np.ndarray:
    """First index assigned to each cell by the sweep along ``axis``.

    Cells of block ``i`` are visited in lexicographic order of the two other
    indices and receive consecutive integers, starting at ``(i-1)m + 1``.
    """
    order = [axis] + [a for a in range(3) if a != axis]
    moved = np.transpose(t, order)
    flat = moved.ravel()
    starts = (np.cumsum(flat) - flat + 1).reshape(moved.shape)
    return np.transpose(starts, np.argsort(order))


def refine_within_blocks(triples: np.ndarray, m: int, max_passes: int = 200) -> np.ndarray:
    """Sorting rule restricted to index blocks of width ``m``.

    For each axis and each block, the block's indices along that axis are
    reassigned so that they ascend as the product of the other two
    coordinates descends.  Every index stays in its block, so the box
    pattern is unchanged.  Passes repeat until nothing moves.
    """
    tr = np.array(triples, dtype=np.int64)
    for _ in range(max_passes):
        old = tr.copy()
        for ax in range(3):
            a, b = (o for o in range(3) if o != ax)
            blocks = (tr[:, ax] - 1) // m
            prod = tr[:, a] * tr[:, b]
            # group by block, then products descending, ties by original row
            order = np.lexsort((np.arange(len(tr)), -prod, blocks))
            # ``order`` groups blocks ascending, so the sorted values line up
            tr[order, ax] = np.sort(tr[:, ax])
        if np.array_equal(tr, old):
            break
    return tr


def build_partition(counts: BoxCounts, refine: bool = True) -> TriplePartition:
    """Index assignment sweeps turning box counts into a partition of ``1..nm``.

    Cell ``(i, j, k)`` receives ``t[i, j, k]`` triples whose coordinates lie
    in blocks ``i``, ``j`` and ``k`` respectively; the ``r``-th index from
    each sweep is zipped together.  With ``refine`` the result is improved
    by :func:`refine_within_blocks`, which keeps every triple in its box.
    """
    counts.validate()
    t = counts.t
    starts = [_sweep_starts(t, ax) for ax in range(3)]
    cells = np.argwhere(t > 0)
    sizes = t[tuple(cells.T)]
    offs = np.arange(sizes.sum()) - np.repeat(np.cumsum(sizes) - sizes, sizes)
    cols = [np.repeat(starts[ax][tuple(cells.T)], sizes) + offs for ax in range(3)]
    triples = np.column_stack(cols).astype(np.int64).reshape(-1, 3)
    if refine:
        triples = refine_within_blocks(triples, counts.m)
    return TriplePartition(triples)


def block_membership_ok(p: TriplePartition, counts: BoxCounts) -> bool:
    """Whether the block pattern ``ceil(a/m), ceil(b/m), ceil(c/m)`` reproduces ``t``."""
    m, n = counts.m, counts.n
    blocks = (p.triples - 1) // m
    if blocks.min(initial=0) < 0 or blocks.max(initial=0) >= n:
        return False
    flat = np.ravel_multi_index(blocks.T, (n, n, n))
    seen = np.bincount(flat, minlength=n ** 3).reshape(n, n, n)
    return bool(np.array_equal(seen, counts.t))


def construct_partition(n: int, m: int, samples: int, seed: int,
                        k: Optional[ModelConstants] = None) -> Tuple[TriplePartition, BoxCounts]:
    """Box masses, integer counts and the refined partition of size ``nm``."""
    counts = integerize(box_masses(n, samples, seed, k), m)
    return build_partition(counts), counts


# -- rearrangement ------------------------------------------------------------

def V(sequences: Sequence[Sequence[float]], perms: Sequence[Sequence[int]]) -> float:
    """``sum_i prod_s a_s[perm_s(i)]`` with 0-based permutations."""
    seqs = np.asarray(sequences, dtype=float)
    idx = np.asarray(perms, dtype=np.int64)
    if seqs.ndim != 2 or idx.shape != seqs.shape:
        raise DomainError("need s sequences and s permutations of one common length")
    return float(np.sum(np.prod(np.take_along_axis(seqs, idx, axis=1), axis=0)))


def rearrangement_check(sequences, perms, rtol: float = 1e-12) -> bool:
    """Whether the identity tuple maximizes ``V`` against ``perms``.

    Sequences must be sorted ascending and nonnegative; with negative
    entries the inequality can fail once there are three or more factors.
    """
    seqs = np.asarray(sequences, dtype=float)
    if seqs.ndim != 2:
        raise DomainError("sequences must form an s x n array")
    if np.asarray(perms).shape != seqs.shape:
        raise DomainError(f"length mismatch: sequences {seqs.shape}, "
                          f"permutations {np.asarray(perms).shape}")
    if np.any(np.diff(seqs, axis=1) < 0):
        raise DomainError("each sequence must be sorted ascending")
    if np.any(seqs < 0):
        raise DomainError("sequences must be nonnegative")
    ident = np.tile(np.arange(seqs.shape[1]), (seqs.shape[0], 1))
    top = V(seqs, ident)
    return top >= V(seqs, perms) - rtol * max(abs(top), 1.0)


def epsilon_bound(n: int) -> float:
    """Bound on ``|xyz - x'y'z'|`` for points in a common box of side ``1/n``.

    ``(x+h)(y+h)(z+h) - xyz <= 3h + 3h^2 + h^3`` on the unit cube.
    """
    return 3.0 / n + 3.0 / n ** 2 + 1.0 / n ** 3


def crude_epsilon_bound(n: int) -> float:
    return 7.0 / n
