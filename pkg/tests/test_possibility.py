import itertools

import pytest
from hypothesis import given, settings, strategies as st

from creaturelab.coding import KappaSeq, kappa_less
from creaturelab.params import LevelPerm, ParamLadder, all_perms
from creaturelab.possibility import (
    CreatureObject,
    HistorySeq,
    cone_disjointness,
    cone_of,
    domain_points,
    empty_history,
    extract_e,
    g_inv_f,
    histories,
    history_from_e,
    is_history,
    is_successor,
    iter_pos,
    join_pos,
    kappa_of,
    make_object,
    pos_count,
    pos_enumerate,
    restrict_history,
    restrict_pos,
    succ_apply,
    tree_less,
    tree_of,
)

L01 = ParamLadder.parse("n=0,1")
L012 = ParamLadder.parse("n=0,1,2")
HIST_012_1 = histories(L012, (0,), 3)
HIST_01_2 = histories(L01, (0, 1), 2)


def identity_history(lad: ParamLadder, u, length: int) -> HistorySeq:
    entries = []
    for i in range(length):
        ident = [LevelPerm.identity(lad.n[i])] * len(u)
        entries.append(make_object(lad, i, u, ident, ident)[0])
    return HistorySeq(tuple(u), tuple(entries))


# counting


@pytest.mark.parametrize(
    "spec, u, i, expected",
    [("n=0,1", (0,), 1, 4), ("n=0,1,2", (0,), 2, 256), ("n=0,1", (0, 1), 1, 16), ("n=0,1,2", (0,), 0, 1)],
)
def test_pos_count_examples(spec, u, i, expected):
    lad = ParamLadder.parse(spec)
    assert pos_count(lad, u, i) == expected
    assert len(pos_enumerate(lad, u, i)) == expected


def test_pos_count_product_structure():
    for lad, i in ((L01, 1), (L012, 1), (L012, 2)):
        assert pos_count(lad, (0, 1), i) == pos_count(lad, (0,), i) * pos_count(lad, (1,), i)


def test_pos_enumeration_is_distinct_and_valid():
    pts = pos_enumerate(L012, (0,), 2)
    assert len(set(pts)) == len(pts)
    d = L012.n[2] - L012.n[1]
    for h in pts:
        for (alpha, g), (h1, h2) in zip(domain_points(L012, h.u, 2), h.pairs):
            for rho in range(4):
                assert h1(rho) >> d == g(rho >> d) and h2(rho) >> d == g(rho >> d)


def test_history_count_matches_product():
    for lad, u in ((L01, (0,)), (L01, (0, 1)), (L012, (0,))):
        for j in range(lad.levels + 1):
            expected = 1
            for i in range(j):
                expected *= pos_count(lad, u, i)
            assert len(histories(lad, u, j)) == expected


# successors


def brute_successors(lad: ParamLadder, x: CreatureObject) -> set[CreatureObject]:
    """All level-(i+1) objects y passing the two defining clauses, found by search."""
    i, u = x.level + 1, x.u
    width, d = lad.n[i], lad.n[i] - lad.n[i - 1]
    perms = all_perms(width)
    keys = all_perms(lad.n[i - 1])
    pair_rows = list(itertools.product(itertools.product(perms, repeat=2), repeat=len(keys)))
    out = set()
    for f, g in itertools.product(perms, repeat=2):
        if any(f(r) >> d != g(r) >> d for r in range(1 << width)):
            continue
        if any(x.g[0](r >> d) != f(r) >> d for r in range(1 << width)):
            continue
        for row in pair_rows:
            if row[keys.index(x.g[0])] == (f, g):
                out.add(CreatureObject(i, u, (f,), (g,), (tuple(row),)))
    return out


def test_is_successor_matches_brute_force():
    (x0,) = histories(L01, (0,), 1)
    x = x0[0]
    found = brute_successors(L01, x)
    perms = all_perms(1)
    pair = list(itertools.product(perms, repeat=2))
    candidates = [
        CreatureObject(1, (0,), (f,), (g,), ((e,),))
        for f in perms for g in perms for e in pair
    ]
    assert len(candidates) == 16
    assert {y for y in candidates if is_successor(L01, x, y)} == found
    assert len(found) == 4


def test_succ_apply_yields_successors():
    for xs in histories(L01, (0,), 1):
        for h in pos_enumerate(L01, (0,), 1):
            ys = succ_apply(L01, xs, h)
            assert is_successor(L01, xs[0], ys[1])
            assert is_history(L01, ys)


def test_level_zero_successor_table():
    for h in pos_enumerate(L01, (0, 1), 0):
        ys = succ_apply(L01, empty_history((0, 1)), h)
        y = ys[0]
        for j in range(2):
            assert y.e[j][0] == (y.f[j], y.g[j])


def test_bad_e_entry_is_not_successor():
    (xs,) = histories(L01, (0,), 1)
    ys = succ_apply(L01, xs, pos_enumerate(L01, (0,), 1)[0])
    y = ys[1]
    other = [p for p in all_perms(1) if p != y.g[0]][0]
    bad = CreatureObject(1, y.u, y.f, y.g, (((y.f[0], other),),))
    assert not is_successor(L01, xs[0], bad)


def test_restriction_commutes_with_successor():
    for i in range(2):
        for xs in histories(L01, (0, 1), i):
            for h in pos_enumerate(L01, (0, 1), i):
                left = restrict_history(succ_apply(L01, xs, h), (0,))
                right = succ_apply(L01, restrict_history(xs, (0,)), restrict_pos(h, (0,)))
                assert left == right


def test_restrict_history_keeps_membership():
    for xs in HIST_01_2:
        assert is_history(L01, xs)
        for w in ((0,), (1,)):
            assert is_history(L01, restrict_history(xs, w))


def test_restrict_identity_and_join():
    for h in pos_enumerate(L01, (0, 1), 1):
        assert restrict_pos(h, (0, 1)) is h
        assert join_pos(restrict_pos(h, (0,)), restrict_pos(h, (1,))) == h


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(histories(L012, (0, 1, 2), 2)), st.sampled_from([((0, 1), (0,)), ((1, 2), (2,)), ((0, 2), (0,))]))
def test_restrict_history_tower(xs, vw):
    v, w = vw
    assert restrict_history(restrict_history(xs, v), w) == restrict_history(xs, w)


# trees and cones


def test_identity_tree_is_prefix_order():
    xs = identity_history(L012, (0,), 3)
    assert is_history(L012, xs)
    nodes = [(i, v) for i in range(3) for v in range(1 << L012.n[i])]
    for (i, a), (j, b) in itertools.product(nodes, repeat=2):
        prefix = i < j and b >> (L012.n[j] - L012.n[i]) == a
        assert tree_less(L012, xs, 0, (i, a), (j, b)) == prefix


def test_g_chain_and_f_restriction_exhaustive():
    n = L012.n
    for xs in HIST_012_1:
        for rho in range(4):
            vals = [xs[j].g_at(0)(rho >> (2 - n[j])) for j in range(3)]
            for j in range(2):
                assert vals[j + 1] >> (n[j + 1] - n[j]) == vals[j]
            for j in range(2):
                top = xs[2].f_at(0)(rho)
                assert top >> (2 - n[j]) == xs[j].g_at(0)(rho >> (2 - n[j]))


def test_tree_of_matches_coded_tree():
    for xs in HIST_012_1:
        kappa = KappaSeq(L012, kappa_of(xs, 0))
        tree = tree_of(L012, xs, 0)
        expected = {(a, b) for a in tree.nodes() for b in tree.nodes() if kappa_less(kappa, a, b)}
        assert tree.less == expected


def test_cone_rejects_equal_ordinals():
    xs = identity_history(L012, (0, 1), 3)
    with pytest.raises(ValueError):
        cone_disjointness(L012, xs, 0, 0, 0, 0, 0)


def test_identity_history_same_images_no_premise():
    xs = identity_history(L012, (0, 1), 3)
    for i in range(3):
        for eta in range(1 << L012.n[i]):
            premise, disjoint = cone_disjointness(L012, xs, 0, 1, i, eta, eta)
            assert not premise
            assert g_inv_f(xs[i], 0, eta) == eta
            assert not disjoint or i == 2


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(histories(L012, (0, 1), 2)), st.integers(0, 255), st.integers(0, 2), st.data())
def test_premise_implies_disjoint_sampled(head, hidx, i, data):
    ys = succ_apply(L012, head, pos_enumerate(L012, (0, 1), 2)[hidx])
    side = 1 << L012.n[i]
    e1 = data.draw(st.integers(0, side - 1))
    e2 = data.draw(st.integers(0, side - 1))
    premise, disjoint = cone_disjointness(L012, ys, 0, 1, i, e1, e2)
    brute1 = {(j, v) for j in range(i + 1, 3) for v in range(1 << L012.n[j]) if tree_less(L012, ys, 0, (i, e1), (j, v))}
    assert brute1 == cone_of(L012, ys, 0, i, e1)
    if premise:
        assert disjoint


# e-tables and kappa


@pytest.mark.parametrize("u", [(0,), (0, 1)])
def test_history_from_e_round_trip(u):
    for j in range(3):
        for xs in histories(L01, u, j):
            assert history_from_e(L01, extract_e(xs), u) == xs


def test_kappa_is_member_of_t():
    for xs in HIST_012_1[::37]:
        kappa = KappaSeq(L012, kappa_of(xs, 0))
        assert len(kappa) == len(xs)


def test_iter_pos_respects_cap():
    from creaturelab.params import CapExceeded

    lad = ParamLadder.parse("n=0,1,2", enum_cap=100)
    with pytest.raises(CapExceeded):
        list(iter_pos(lad, (0,), 2))
