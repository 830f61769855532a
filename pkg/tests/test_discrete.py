import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xyzot import kernels
from xyzot.discrete import (BoxCounts, RepairFailure, TriplePartition, V, block_membership_ok,
                            box_masses, brute_force_min, build_partition, construct_partition,
                            crude_epsilon_bound, epsilon_bound, heuristic_min, integerize,
                            normalized_cost, partition_cost, rearrangement_check,
                            refine_within_blocks)
from xyzot.errors import DomainError, InvalidPartitionError, SizeLimitError
from xyzot.geometry import param_segment

PINNED = {1: 1, 2: 6, 3: 18, 4: 44, 5: 89, 6: 162, 7: 271}


def _naive_min(n):
    best = None
    for s in itertools.permutations(range(1, n + 1)):
        for t in itertools.permutations(range(1, n + 1)):
            v = sum((i + 1) * s[i] * t[i] for i in range(n))
            if best is None or v < best[0]:
                best = (v, s, t)
    return best


def test_partition_cost_examples():
    assert partition_cost(TriplePartition([[1, 1, 1]])) == 1
    assert partition_cost(TriplePartition([[1, 1, 2], [2, 2, 1]])) == 6
    assert partition_cost(TriplePartition([[i, i, i] for i in (1, 2, 3)])) == 36
    with pytest.raises(InvalidPartitionError):
        TriplePartition([[1, 1, 1], [1, 2, 2]])


def test_normalized_cost_exact():
    p = TriplePartition([[1, 2, 3], [2, 3, 1], [3, 1, 2]])
    assert normalized_cost(p) == Fraction(18, 81)
    assert normalized_cost(p) * p.n ** 4 == partition_cost(p)


@pytest.mark.parametrize("n", range(1, 6))
def test_brute_force_matches_naive_oracle(n):
    cost, part = brute_force_min(n)
    ref = _naive_min(n)
    assert cost == ref[0] == PINNED[n]
    np.testing.assert_array_equal(part.triples[:, 1], ref[1])
    np.testing.assert_array_equal(part.triples[:, 2], ref[2])
    assert partition_cost(part) == cost


@pytest.mark.parametrize("n", [6, 7])
def test_brute_force_pinned(n):
    assert brute_force_min(n)[0] == PINNED[n]


@pytest.mark.parametrize("threads", [1, 3])
def test_brute_force_thread_independent(threads):
    a = brute_force_min(6, threads=threads)
    b = brute_force_min(6, threads=1)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1].triples, b[1].triples)


def test_brute_force_python_backend():
    with kernels.backend("python"):
        assert brute_force_min(5)[0] == 89


def test_brute_force_size_limit():
    with pytest.raises(SizeLimitError):
        brute_force_min(8)
    with pytest.raises(DomainError):
        brute_force_min(0)


def test_brute_force_trend(k):
    vals = [PINNED[n] / n ** 4 for n in range(1, 8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    for n in (4, 5, 6):
        assert k.primal_value - 2 * crude_epsilon_bound(n) <= PINNED[n] / n ** 4


@pytest.mark.parametrize("n", range(1, 7))
def test_heuristic_dominated_by_brute_force(n):
    cost, part = heuristic_min(n, seed=0)
    assert cost >= PINNED[n]
    assert partition_cost(part) == cost
    if n <= 5:
        assert cost == PINNED[n]


def test_heuristic_large(k):
    cost, _ = heuristic_min(500, seed=0, restarts=1)
    assert k.primal_value <= cost / 500 ** 4 <= k.primal_value + 0.02


def test_epsilon_bound():
    assert epsilon_bound(1) == 7.0 == crude_epsilon_bound(1)
    for n in (2, 5, 10):
        h = 1.0 / n
        worst = max((x + h) * (y + h) * (z + h) - x * y * z
                    for x in np.linspace(0, 1 - h, 5) for y in np.linspace(0, 1 - h, 5)
                    for z in np.linspace(0, 1 - h, 5))
        assert worst <= epsilon_bound(n) + 1e-12 <= crude_epsilon_bound(n) + 1e-12


def test_box_masses(k):
    assert box_masses(1, 10_000, 0).tolist() == [[[1.0]]]
    rho = box_masses(2, 100_000, 1)
    assert rho.sum() == pytest.approx(1.0, abs=1e-15)
    # the segment M_x near t = 0 lies in box (x low, y high, z high)
    pt = param_segment("x", 0.01, k)
    assert pt[0] < 0.5 < pt[1] and rho[0, 1, 1] > 0
    # the all-high box misses M: xyz >= 1/8 > c there and no segment point has x >= 1/2
    assert rho[1, 1, 1] == 0.0
    for ax in range(3):
        fib = rho.sum(axis=tuple(a for a in range(3) if a != ax))
        np.testing.assert_allclose(fib, 0.5, atol=3 * np.sqrt(0.25 / 100_000) * 2)


def test_integerize_examples():
    assert integerize(np.ones((1, 1, 1)), 5).t.tolist() == [[[5]]]
    t = np.zeros((2, 2, 2), dtype=int)
    t[0, 0, 1] = t[1, 1, 0] = 2
    t[0, 1, 0] = t[1, 0, 1] = 1
    counts = BoxCounts(t, 3)
    back = integerize(t / t.sum(), 3)
    np.testing.assert_array_equal(back.t, counts.t)


def test_integerize_monte_carlo_fibers():
    rho = box_masses(4, 100_000, 2)
    counts = integerize(rho, 32)
    for sums in counts.fiber_sums():
        np.testing.assert_array_equal(sums, 32)
    again = integerize(rho, 32)
    np.testing.assert_array_equal(again.t, counts.t)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 20), st.integers(0, 2 ** 32 - 1))
def test_integerize_random_masses(n, m, seed):
    rho = np.random.default_rng(seed).random((n, n, n))
    rho /= rho.sum()
    counts = integerize(rho, m)
    assert counts.t.min() >= 0
    for sums in counts.fiber_sums():
        assert np.all(sums == m)


def test_integerize_errors():
    with pytest.raises(DomainError):
        integerize(np.ones((2, 2, 2)), 4)
    with pytest.raises(DomainError):
        integerize(np.ones((1, 1, 1)), 0)
    with pytest.raises(RepairFailure):
        integerize(np.random.default_rng(0).dirichlet(np.ones(27)).reshape(3, 3, 3), 50,
                   max_steps=0)


def test_boxcounts_validation():
    with pytest.raises(InvalidPartitionError):
        BoxCounts(np.array([[[1, 0], [0, 0]], [[0, 0], [0, 2]]]), 1)
    with pytest.raises(DomainError):
        BoxCounts(np.ones((2, 3, 2), dtype=int), 1)


def test_build_partition_single_block():
    counts = BoxCounts(np.array([[[3]]]), 3)
    raw = build_partition(counts, refine=False)
    assert raw.triples.tolist() == [[1, 1, 1], [2, 2, 2], [3, 3, 3]]
    refined = build_partition(counts)
    assert partition_cost(refined) == 18


def _all_valid_counts(n, m):
    cells = list(itertools.product(range(n), repeat=3))
    for vals in itertools.product(range(m + 1), repeat=len(cells)):
        t = np.array(vals).reshape(n, n, n)
        if all(np.all(t.sum(axis=tuple(a for a in range(3) if a != ax)) == m) for ax in range(3)):
            yield t


def test_build_partition_exhaustive_small():
    found = 0
    for t in _all_valid_counts(2, 2):
        counts = BoxCounts(t, 2)
        for refine in (False, True):
            part = build_partition(counts, refine=refine)
            assert part.n == 4 and block_membership_ok(part, counts)
        found += 1
    assert found > 10


def test_refinement_keeps_blocks_and_lowers_cost():
    counts = integerize(box_masses(3, 50_000, 4), 8)
    raw = build_partition(counts, refine=False)
    fine = TriplePartition(refine_within_blocks(raw.triples, 8))
    assert block_membership_ok(fine, counts)
    assert partition_cost(fine) <= partition_cost(raw)


def test_constructed_partition_close_to_optimum(k):
    part, counts = construct_partition(4, 16, 200_000, 0)
    assert block_membership_ok(part, counts)
    assert abs(partition_cost(part) / 64 ** 4 / k.primal_value - 1) < 0.15


def test_rearrangement_examples():
    a = [[1, 2, 3, 4], [1, 2, 3, 4]]
    ident = [list(range(4))] * 2
    assert rearrangement_check(a, ident)
    assert V(a, ident) == V(a, ident)
    rev = [list(range(4)), list(range(4))[::-1]]
    assert rearrangement_check(a, rev)
    all_vals = [V(a, [list(range(4)), list(p)]) for p in itertools.permutations(range(4))]
    assert V(a, rev) == min(all_vals)


def test_rearrangement_errors():
    with pytest.raises(DomainError):
        rearrangement_check([[1, 2], [1, 2]], [[0, 1]])
    with pytest.raises(DomainError):
        rearrangement_check([[2, 1], [1, 2]], [[0, 1], [0, 1]])
    with pytest.raises(DomainError):
        rearrangement_check([[-2, -1]] * 3, [[0, 1]] * 3)


def test_negative_entries_break_the_inequality():
    a = np.array([[-2.0, -1.0]] * 3)
    ident = np.array([[0, 1]] * 3)
    swapped = np.array([[0, 1], [0, 1], [1, 0]])
    assert V(a, ident) < V(a, swapped)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_rearrangement_randomized(s, rng):
    for _ in range(300):
        n = int(rng.integers(1, 9))
        seqs = np.sort(rng.random((s, n)) * 10, axis=1)
        perms = np.array([rng.permutation(n) for _ in range(s)])
        assert rearrangement_check(seqs, perms)
