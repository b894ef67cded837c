import pytest
from hypothesis import given, strategies as st

from creaturelab.certs import canonical_json
from creaturelab.coding import KappaSeq, kappa_less
from creaturelab.conditions import leq, project_condition, transfer
from creaturelab.fusion import (
    FusionPlan,
    NameTriple,
    Oracle,
    OracleRejected,
    OracleSpec,
    ScheduledName,
    base_condition,
    branch_nodes,
    build_fusion,
    extract_branch,
    register_oracle,
    sibling_witnesses,
    split_maps,
    tree_strings,
)
from creaturelab.params import ParamLadder, all_perms

LAD = ParamLadder.parse("n=0,1,2")

PLAN_DATA = {
    "ladder": "n=0,1,2",
    "depth": 2,
    "horizon": 3,
    "splits": [0, 0],
    "oracles": [{"level": 1, "id": "lift", "params": {"to": 2, "width": 2}}],
    "names": [{"level": 0, "m": 1, "k": 0, "seed": 7}],
    "base": {"i": 2, "size": 16, "seed": 1},
}


@pytest.fixture(scope="module")
def tree():
    return build_fusion(FusionPlan.from_data(PLAN_DATA))


# tree shape


@given(st.lists(st.integers(0, 5), max_size=5))
def test_tree_strings_shape(raw):
    splits = [min(s, i) for i, s in enumerate(raw)]
    levels = tree_strings(splits)
    for i, lvl in enumerate(levels):
        assert len(lvl) == i + 1
        assert lvl == sorted(lvl)
    for i, s in enumerate(splits):
        parent = levels[i][s]
        assert parent + "0" in levels[i + 1] and parent + "1" in levels[i + 1]


@given(st.integers(0, 6).flatmap(lambda i: st.tuples(st.just(i), st.integers(0, i))))
def test_split_maps(args):
    i, s = args
    g0, g1 = split_maps(i, s)
    assert sorted(g0.values()) == sorted(set(g0.values()))
    assert set(g0.values()) | set(g1.values()) == set(range(i + 2))
    assert set(g0.values()) & set(g1.values()) == set(range(i + 2)) - {s, s + 1}
    assert g0[s] == s and g1[s] == s + 1
    for g in (g0, g1):
        assert all(g[a] < g[b] for a in g for b in g if a < b)


# plans


def test_plan_validation():
    base = base_condition(LAD, 2, 3, size=4)
    with pytest.raises(ValueError):
        FusionPlan(LAD, 2, base, (0, 2))
    with pytest.raises(ValueError):
        FusionPlan(LAD, 1, base, (0,), names=(ScheduledName(1, NameTriple(1, 0, 0)),))
    with pytest.raises(ValueError):
        NameTriple(1, 1, 0)
    spec = OracleSpec.make(0, "lift", to=2, width=1)
    with pytest.raises(ValueError):
        FusionPlan(LAD, 1, base, (0,), oracles=(spec, spec))


def test_plan_round_trip():
    plan = FusionPlan.from_data(PLAN_DATA)
    again = FusionPlan.from_data(plan.to_data())
    assert again == plan


def test_base_condition_is_seeded():
    a = base_condition(LAD, 2, 3, size=16, seed=5)
    b = base_condition(LAD, 2, 3, size=16, seed=5)
    assert a == b and a.u == (0,) and a.i == 2
    assert len(a.creature(2).F.weights) == 16


# building


def test_tree_passes(tree):
    assert tree.passed
    assert len(tree.levels) == 3
    assert [p.u for p in tree.levels] == [(0,), (0, 1), (0, 1, 2)]
    assert tree.name_log[0]["pairs"] == 1


def test_levels_project_onto_children(tree):
    for i, (g0, g1) in enumerate(tree.maps):
        assert all(tree.clause_i[i])
        nxt = tree.levels[i + 1]
        for g in (g0, g1):
            child = transfer(tree.levels[i], g)
            assert leq(child, project_condition(nxt, child.u))


def test_oracle_met(tree):
    (entry,) = tree.oracle_log
    assert entry["met"] and entry["i_p"] == 2


def test_build_is_deterministic(tree):
    again = build_fusion(FusionPlan.from_data(PLAN_DATA))
    assert canonical_json(again.to_data()) == canonical_json(tree.to_data())


def test_decide_oracle():
    plan = FusionPlan(
        LAD, 1, base_condition(LAD, 1, 3, size=8), (0,),
        oracles=(OracleSpec.make(0, "decide", level=1, seed=3, width=1),),
    )
    t = build_fusion(plan)
    assert t.oracle_log[0]["met"]


def test_oracle_width_mismatch_is_skipped():
    plan = FusionPlan(LAD, 1, base_condition(LAD, 2, 3, size=4), (0,), oracles=(OracleSpec.make(0, "lift", to=3, width=2),))
    t = build_fusion(plan)
    assert t.oracle_log[0]["skipped"]


def test_unknown_oracle():
    with pytest.raises(KeyError):
        OracleSpec.make(0, "no-such-oracle").build(LAD)


def test_rejecting_bad_oracle():
    @register_oracle("test-shrink-history")
    def _bad(ladder, params):
        def apply(p):
            return base_condition(ladder, 1, p.horizon, size=4)

        return Oracle("test-shrink-history", 1, lambda p: True, apply)

    plan = FusionPlan(LAD, 0, base_condition(LAD, 2, 3, size=4), (), oracles=(OracleSpec.make(0, "test-shrink-history"),))
    with pytest.raises(OracleRejected):
        build_fusion(plan)


# extraction


def test_extract_branch(tree):
    leaves = tree_strings(tree.plan.splits)[-1]
    for m, eta in enumerate(leaves):
        by_pos = extract_branch(tree, m)
        by_name = extract_branch(tree, eta)
        assert by_pos.eta == eta and by_name.leaf == m
        assert set(by_pos.kappas) == {0, 1, 2}
        assert all(len(k) == 2 for k in by_pos.kappas.values())
    with pytest.raises(KeyError):
        extract_branch(tree, "11")


def test_branch_nodes_follow_kappa():
    for perms in [(p0, p1, p2) for p0 in all_perms(0) for p1 in all_perms(1) for p2 in all_perms(2)][::5]:
        kappa = KappaSeq(LAD, perms)
        for top in range(4):
            b = branch_nodes(kappa, 2, top)
            assert b[-1] == top
            for j in range(2):
                assert kappa_less(kappa, (j, b[j]), (2, top))


def test_sibling_witnesses(tree):
    ws = sibling_witnesses(tree)
    assert ws
    for w in ws:
        assert w["witness"] is not None
        assert -1 <= w["witness"] <= tree.plan.base.horizon
        assert w["kind"] in ("cones", "diverge")
