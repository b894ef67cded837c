import itertools

import pytest
from hypothesis import given, strategies as st

from creaturelab.coding import (
    KappaSeq,
    a_kappa,
    bounded_intersection,
    cd,
    code_F,
    coded_less,
    cones_disjoint,
    decode_F,
    is_branch,
    is_delta_system,
    kappa_less,
    level_interval,
    op_map,
    pr,
)
from creaturelab.params import LevelPerm, ParamLadder, all_perms

L01 = ParamLadder.parse("n=0,1")
L012 = ParamLadder.parse("n=0,1,2")


def identity_kappa(lad: ParamLadder, length: int) -> KappaSeq:
    return KappaSeq(lad, tuple(LevelPerm.identity(lad.n[j]) for j in range(length)))


def all_kappas(lad: ParamLadder, length: int):
    for perms in itertools.product(*(all_perms(lad.n[j]) for j in range(length))):
        yield KappaSeq(lad, perms)


# pairing


def test_pr_small_values():
    assert pr(0, 0) == 0
    assert [pr(0, 1), pr(1, 0), pr(0, 2), pr(1, 1), pr(2, 0)] == [1, 2, 3, 4, 5]


def test_pr_injective_and_onto_initial_segment():
    codes = {pr(n, m): (n, m) for n in range(50) for m in range(50)}
    assert len(codes) == 2500
    # every diagonal with n + m < 50 is fully present
    assert set(range(50 * 51 // 2)) <= codes.keys()


def test_pr_rejects_negative():
    with pytest.raises(ValueError):
        pr(-1, 0)


@given(st.dictionaries(st.integers(0, 40), st.integers(0, 40), max_size=10))
def test_cd_is_image_of_pairing(h):
    assert cd(h) == {pr(n, v) for n, v in h.items()}
    assert len(cd(h)) == len(h)


def test_cd_empty():
    assert cd({}) == set()


# level coding


def test_level_intervals():
    assert [list(level_interval(L012, i)) for i in range(3)] == [[0], [1, 2], [3, 4, 5, 6]]


def test_code_round_trip():
    lad = ParamLadder.parse("n=0,1,3")
    seen = []
    for i in range(lad.levels):
        for v in range(1 << lad.n[i]):
            c = code_F(lad, i, v)
            assert decode_F(lad, c) == (i, v)
            seen.append(c)
    assert seen == list(range(len(seen)))


@pytest.mark.parametrize("level, value", [(3, 0), (1, 2), (-1, 0)])
def test_code_rejects_outside(level, value):
    with pytest.raises(ValueError):
        code_F(L012, level, value)


def test_decode_rejects_beyond_range():
    with pytest.raises(ValueError):
        decode_F(L012, 7)


# kappa orders


def test_kappa_rejects_wrong_width():
    with pytest.raises(ValueError):
        KappaSeq(L012, (LevelPerm.identity(1),))


def test_kappa_less_is_strict_order_and_graded():
    for kappa in all_kappas(L012, 3):
        nodes = kappa.nodes()
        rel = {(a, b) for a in nodes for b in nodes if kappa_less(kappa, a, b)}
        for a in nodes:
            assert (a, a) not in rel
        for (a, b), (c, d) in itertools.product(rel, repeat=2):
            if b == c:
                assert (a, d) in rel
        for a, b in rel:
            assert a[0] < b[0]
        # every node above the root has exactly one predecessor per lower level
        for j, v in nodes:
            for i in range(j):
                assert sum((x, (j, v)) in rel for x in nodes if x[0] == i) == 1


def test_identity_kappa_is_prefix_order():
    kappa = identity_kappa(L012, 3)
    for (i, a), (j, b) in itertools.product(kappa.nodes(), repeat=2):
        assert kappa_less(kappa, (i, a), (j, b)) == (i < j and b >> (j - i) == a)


def test_a_kappa_identity():
    kappa = identity_kappa(L01, 2)
    assert coded_less(kappa) == {(0, 1), (0, 2)}
    assert a_kappa(kappa, 10) == sorted([pr(0, 1), pr(0, 2)])
    assert a_kappa(kappa, 2) == [pr(0, 1)]


def test_a_kappa_distinguishes_trees():
    sets = {tuple(a_kappa(k, 100)) for k in all_kappas(L012, 3)}
    trees = {frozenset(coded_less(k)) for k in all_kappas(L012, 3)}
    assert len(sets) == len(trees)


def test_is_branch():
    kappa = identity_kappa(L012, 3)
    assert is_branch(kappa, [0, 1, 2])
    assert not is_branch(kappa, [0, 1, 1])


# cones and intersections


def test_cones_disjoint_identical_is_none():
    kappa = identity_kappa(L012, 3)
    assert cones_disjoint([0, 1, 3], kappa, [0, 1, 3], kappa) is None


def test_cones_disjoint_split_at_level_one():
    kappa = identity_kappa(L012, 3)
    assert cones_disjoint([0, 0, 1], kappa, [0, 1, 2], kappa) == 1


def test_cones_disjoint_through_permuted_tree():
    k1 = identity_kappa(L012, 3)
    swap = LevelPerm(1, (1, 0))
    k2 = KappaSeq(L012, (LevelPerm.identity(0), swap, LevelPerm.identity(2)))
    # under k2 node (1,1) sits over {0,1}, the same cone as (1,0) under k1
    assert cones_disjoint([0, 0, 1], k1, [0, 1, 1], k2) is None
    assert cones_disjoint([0, 0, 1], k1, [0, 0, 1], k2) == 1


def test_bounded_intersection_cases():
    assert bounded_intersection([0, 1, 3], [0, 1, 3]) is None
    assert bounded_intersection([0, 1, 3], [0, 1, 3], sealed_top=True) == 2
    assert bounded_intersection([0, 1, 3], [0, 1, 2]) == 1
    assert bounded_intersection([0, 0, 1], [0, 1, 2]) == 0
    assert bounded_intersection([], []) is None
    with pytest.raises(ValueError):
        bounded_intersection([0], [0, 1])


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=6))
def test_bounded_intersection_is_last_agreement(pairs):
    b1, b2 = [p[0] for p in pairs], [p[1] for p in pairs]
    a = bounded_intersection(b1, b2, sealed_top=True)
    agree = [j for j in range(len(pairs)) if b1[j] == b2[j]]
    assert a == (agree[-1] if agree else -1)
    for j in range(a + 1, len(pairs)):
        assert b1[j] != b2[j]


# order-preserving maps


def test_op_map():
    assert op_map({0, 9}, {5, 9}) == {0: 5, 9: 9}
    with pytest.raises(ValueError):
        op_map({0}, {1, 2})


@pytest.mark.parametrize(
    "u, v, expected",
    [({0, 9}, {5, 9}, True), ({0, 2}, {1, 2}, True), ({0, 5}, {5, 9}, False), ({0, 1}, {2}, False), ({3}, {3}, True)],
)
def test_delta_system(u, v, expected):
    assert is_delta_system(u, v) == expected


@given(st.frozensets(st.integers(0, 20), max_size=5), st.frozensets(st.integers(0, 20), max_size=5))
def test_delta_system_brute(u, v):
    if len(u) != len(v):
        assert not is_delta_system(u, v)
        return
    ranks_u = {a: sorted(u).index(a) for a in u}
    ranks_v = {a: sorted(v).index(a) for a in v}
    expected = all(ranks_u[a] == ranks_v[a] for a in u & v)
    assert is_delta_system(u, v) == expected
