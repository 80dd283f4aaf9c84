import random

import pytest

from oracles import all_subsets, reuse_sequence_optimum
from qsynth.reuse import AuxPool, PoolEntry, ReuseChoice, apply_reuse, nondominated_choices, reuse_bounds


def test_pool_is_sorted_deepest_first():
    pool = AuxPool.of({4: 10, 2: 30, 7: 10})
    assert pool.depths == (30, 10, 10)
    assert [e.qubit for e in pool.entries] == [2, 4, 7]


def test_duplicate_qubits_rejected():
    with pytest.raises(ValueError):
        AuxPool((PoolEntry(0, 1), PoolEntry(0, 2)))


def test_take_and_give():
    pool = AuxPool.of([5, 9])
    rest = pool.take([PoolEntry(1, 9)])
    assert rest.entries == (PoolEntry(0, 5),)
    with pytest.raises(ValueError):
        rest.take([PoolEntry(1, 9)])
    assert rest.give([3], 12).depths == (12, 5)


def test_three_element_example():
    choices = nondominated_choices(AuxPool.of([800, 440, 150]), 2)
    assert [tuple(e.depth for e in c.entries) for c in choices] == [(440, 150), (800, 440)]
    assert [c.depth for c in choices] == [440, 800]


def test_k_zero_and_out_of_range():
    assert nondominated_choices(AuxPool.of([1]), 0) == [ReuseChoice()]
    with pytest.raises(ValueError):
        nondominated_choices(AuxPool.of([1]), 2)
    assert ReuseChoice().depth == 0


def test_all_windows_for_full_length():
    (only,) = nondominated_choices(AuxPool.of([3, 1, 2]), 3)
    assert only.depth == 3


@pytest.mark.parametrize("aux, pool, phys, F, cap, expected", [
    (3, 2, 2, 4, None, (0, 2)),
    (3, 2, 2, 4, 7, (2, 2)),   # one fresh qubit allowed, so two must come from the pool
    (3, 0, 0, 4, 5, (2, 0)),   # infeasible: k_min > k_max
    (1, 5, 5, 4, 20, (0, 1)),
])
def test_reuse_bounds(aux, pool, phys, F, cap, expected):
    assert reuse_bounds(aux, pool, phys, F, cap) == expected


def test_apply_reuse_waits_for_the_deepest_reused_qubit():
    pool = AuxPool.of({0: 7, 1: 3})
    (choice, _) = nondominated_choices(pool, 1)
    assert choice.qubits == (1,)
    res = apply_reuse(choice, pool, dep_depth=5, node_depth=4, aux=2, n_phys=2, first_new_qubit=2)
    assert (res.start, res.end, res.qubits, res.n_phys) == (5, 9, (1, 2), 3)
    assert sorted((e.qubit, e.depth) for e in res.pool.entries) == [(0, 7), (1, 9), (2, 9)]
    kept = apply_reuse(choice, pool, 0, 4, 2, 2, 2, release=False)
    assert kept.start == 3 and kept.pool.entries == (PoolEntry(0, 7),)


@pytest.mark.parametrize("seed", range(60))
def test_windows_reach_the_subset_optimum(seed):
    rng = random.Random(seed + 77)
    pool = [rng.randint(0, 30) for _ in range(rng.randint(1, 6))]
    consumers = [(rng.randint(0, 30), rng.randint(1, 10), rng.randint(0, len(pool))) for _ in range(rng.randint(1, 3))]

    def windows(p, k):
        return [c.qubits for c in nondominated_choices(AuxPool.of(list(p)), k)]

    assert reuse_sequence_optimum(pool, consumers, windows) == reuse_sequence_optimum(pool, consumers, all_subsets)
