import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from creaturelab.norms import (
    Creature,
    WeightedPos,
    balanced_product_bound,
    bigness_select,
    characteristic,
    densify,
    extend_restriction,
    halve,
    is_balanced,
    is_strongly_balanced,
    mass,
    nor0,
    nor0_at_density,
    nor0_of_ratio,
    nor1,
    nor2,
    nor_drop_leq,
    pad_to_strong,
    product,
    restrict_weighted,
    round_dyadic,
    sigma_member,
    unhalve,
    weighted,
)
from creaturelab.params import ParamLadder
from creaturelab.possibility import join_pos, pos_enumerate, restrict_pos

L01 = ParamLadder.parse("n=0,1")
P0 = pos_enumerate(L01, (0,), 1)
P1 = pos_enumerate(L01, (1,), 1)
P2 = pos_enumerate(L01, (2,), 1)
P01 = pos_enumerate(L01, (0, 1), 1)

fracs = st.fractions(min_value=0, max_value=1, max_denominator=8)


def float_nor0(k: int, d: Fraction) -> float:
    """Direct evaluation of k - log_3(log_k(k / d)), clamped at zero."""
    inner = math.log(k / float(d), k)
    return max(0.0, k - math.log(inner, 3)) if inner > 0 else float(k)


# nor0


def test_full_density_has_norm_k():
    for k in (2, 3, 4):
        assert nor0_at_density(k, Fraction(1)).value == pytest.approx(k)
    F = characteristic(L01, (0,), 1)
    assert nor0(F).value == pytest.approx(3)


def test_zero_threshold_is_exact():
    # nor0 vanishes exactly at density k^-(3^k - 1)
    assert nor0_at_density(2, Fraction(1, 2**8)).exact_zero
    assert not nor0_at_density(2, Fraction(1, 2**8) + Fraction(1, 2**20)).exact_zero
    assert nor0_at_density(3, Fraction(1, 3**26)).exact_zero
    assert not nor0_at_density(3, Fraction(2, 3**26)).exact_zero


@given(st.integers(2, 4), st.fractions(min_value=Fraction(1, 10**6), max_value=1))
def test_nor0_matches_float_formula(k, d):
    got = nor0_at_density(k, d)
    assert got.value == pytest.approx(float_nor0(k, d), abs=1e-9)
    assert got.value >= 0


@given(st.integers(2, 4), st.fractions(min_value=Fraction(1, 10**6), max_value=1), st.fractions(min_value=Fraction(1, 10**6), max_value=1))
def test_nor0_monotone_in_density(k, d1, d2):
    lo, hi = sorted((d1, d2))
    assert nor0_at_density(k, lo).value <= nor0_at_density(k, hi).value + 1e-12


def test_nor0_of_ratio_rejects_small_ratio():
    with pytest.raises(ValueError):
        nor0_of_ratio(3, Fraction(2))


def test_nor0_of_zero_function_raises():
    with pytest.raises(ValueError):
        nor0(weighted(L01, (0,), 1, {}))


@settings(max_examples=200)
@given(st.integers(2, 4), st.fractions(min_value=Fraction(1, 10**4), max_value=1), st.fractions(min_value=Fraction(1, 10**4), max_value=1), st.integers(0, 3))
def test_nor_drop_leq_matches_floats(k, d_old, d_new, delta):
    lad = ParamLadder.from_widths((0, 1), k=(k, k))
    pts = pos_enumerate(lad, (0,), 1)
    total = len(pts)
    F = WeightedPos(lad, (0,), 1, {h: d_old for h in pts})
    G = WeightedPos(lad, (0,), 1, {h: d_new for h in pts})
    lhs = nor0(G).value
    rhs = nor0(F).value - delta
    assume(abs(lhs - rhs) > 1e-7)
    assert total == 4
    assert nor_drop_leq(G, F, delta) == (lhs >= rhs)


# weighted functions


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightedPos(L01, (0,), 1, {P0[0]: Fraction(3, 2)})
    with pytest.raises(ValueError):
        WeightedPos(L01, (0,), 1, {P1[0]: Fraction(1)})
    with pytest.raises(ValueError):
        WeightedPos(L01, (0,), 1, {}, "wpos")
    with pytest.raises(ValueError):
        WeightedPos(L01, (0,), 1, {P0[0]: Fraction(1, 3)}, "vpos")


def test_flavor_inference():
    assert WeightedPos(L01, (0,), 1, {P0[0]: Fraction(1, 2)}).flavor == "vpos"
    assert WeightedPos(L01, (0,), 1, {P0[0]: Fraction(1, 3)}).flavor == "wpos"
    assert WeightedPos(L01, (0,), 1, {}).flavor == "xpos"


def test_round_dyadic_floors_to_grid():
    F = WeightedPos(L01, (0,), 1, {P0[0]: Fraction(1, 3), P0[1]: Fraction(3, 4), P0[2]: Fraction(1)})
    R = round_dyadic(F)
    assert R.weights == {P0[1]: Fraction(1, 2), P0[2]: Fraction(1)}
    assert R.flavor == "vpos"


def brute_restrict(F: WeightedPos, w) -> dict:
    rest = tuple(a for a in F.u if a not in w)
    fiber = pos_enumerate(F.ladder, rest, F.level)
    out = {}
    for h in pos_enumerate(F.ladder, w, F.level):
        s = sum((F(join_pos(h, e)) for e in fiber), Fraction(0))
        if s:
            out[h] = s / len(fiber)
    return out


@given(st.lists(fracs, min_size=16, max_size=16))
def test_restrict_weighted_matches_brute_force(vals):
    F = weighted(L01, (0, 1), 1, dict(zip(P01, vals)))
    for w in ((0,), (1,)):
        assert restrict_weighted(F, w).weights == brute_restrict(F, w)
        assert mass(restrict_weighted(F, w)) * 4 == mass(F)


def test_restrict_weighted_rejects_bad_support():
    F = characteristic(L01, (0,), 1)
    with pytest.raises(ValueError):
        restrict_weighted(F, ())
    with pytest.raises(ValueError):
        restrict_weighted(F, (1,))


@given(st.lists(fracs, min_size=16, max_size=16), st.lists(fracs, min_size=4, max_size=4))
def test_extend_restriction(vals, cut):
    F1 = weighted(L01, (0, 1), 1, dict(zip(P01, vals)))
    F0 = restrict_weighted(F1, (0,))
    F2 = weighted(L01, (0,), 1, {h: F0(h) * c for h, c in zip(P0, cut)})
    F3 = extend_restriction(F1, F2)
    assert F3.leq(F1)
    assert restrict_weighted(F3, (0,)).weights == F2.weights


@given(st.lists(fracs, min_size=16, max_size=16), st.lists(fracs, min_size=16, max_size=16))
def test_product_matches_brute_force(v1, v2):
    F1 = weighted(L01, (0, 1), 1, dict(zip(P01, v1)))
    P02 = pos_enumerate(L01, (0, 2), 1)
    F2 = weighted(L01, (0, 2), 1, dict(zip(P02, v2)))
    prod = product(F1, F2)
    expected = {}
    for h in pos_enumerate(L01, (0, 1, 2), 1):
        v = F1(restrict_pos(h, (0, 1))) * F2(restrict_pos(h, (0, 2)))
        if v:
            expected[h] = v
    assert prod.weights == expected


def balanced_pair(a, b1, perm):
    """F1 = a(h|0) b1(h|1) on (0,1) and F2 = a(h|0) b2(h|2) on (0,2), b2 a permutation of b1."""
    b2 = [b1[j] for j in perm]
    F1 = weighted(L01, (0, 1), 1, {join_pos(x, y): a[i] * b1[j] for i, x in enumerate(P0) for j, y in enumerate(P1)})
    F2 = weighted(L01, (0, 2), 1, {join_pos(x, y): a[i] * b2[j] for i, x in enumerate(P0) for j, y in enumerate(P2)})
    return F1, F2


@settings(max_examples=60, deadline=None)
@given(
    st.lists(fracs, min_size=4, max_size=4),
    st.lists(fracs, min_size=4, max_size=4),
    st.permutations(range(4)),
)
def test_balanced_product_density_bound(a, b1, perm):
    assume(any(a) and any(b1))
    F1, F2 = balanced_pair(a, b1, perm)
    assert is_balanced(F1, F2)
    assert is_strongly_balanced(F1, F2)
    bound = balanced_product_bound(F1, F2)
    assert bound.verdict and bound.lhs >= bound.rhs


def test_unbalanced_pair_detected():
    F1 = characteristic(L01, (0, 1), 1)
    F2 = weighted(L01, (0, 2), 1, {h: Fraction(1) for h in pos_enumerate(L01, (0, 2), 1)[:8]})
    assert not is_balanced(F1, F2)
    with pytest.raises(ValueError):
        balanced_product_bound(F1, F2)


def test_pad_to_strong():
    F1 = characteristic(L01, (0, 1), 1)
    F2 = characteristic(L01, (0,), 1)
    assert is_balanced(F1, F2) and not is_strongly_balanced(F1, F2)
    G1, G2 = pad_to_strong(F1, F2)
    assert is_strongly_balanced(G1, G2)
    assert len(set(G1.u) - set(G2.u)) == len(set(G2.u) - set(G1.u)) == 1


# creatures


def test_nor1_nor2():
    c = Creature(characteristic(L01, (0,), 1), Fraction(1, 2))
    assert nor1(c) == pytest.approx(2.5)
    assert nor2(c) == pytest.approx(math.log2(2.5))
    assert nor2(Creature(c.F, Fraction(5, 2))) == 0.0
    assert c.in_cr() and not Creature(c.F, 4).in_cr()


def test_negative_m_rejected():
    with pytest.raises(ValueError):
        Creature(characteristic(L01, (0,), 1), -1)


@given(st.lists(fracs, min_size=4, max_size=4), st.fractions(min_value=0, max_value=1, max_denominator=16))
def test_halve_splits_norm(vals, m):
    assume(any(vals))
    F = weighted(L01, (0,), 1, dict(zip(P0, vals)))
    assume(nor0(F).value >= float(m))
    c = Creature(F, m)
    h = halve(c)
    assert h.in_cr()
    assert nor1(h) == pytest.approx(nor1(c) / 2, abs=1e-9)
    assert sigma_member(unhalve(h, c), c)
    assert nor1(unhalve(h, c)) == pytest.approx(nor1(c))


def test_densify_needs_room():
    c = Creature(characteristic(L01, (0,), 1), 0)
    d = densify(c)
    assert d.F.weights == c.F.weights and d.is_dyadic()
    with pytest.raises(ValueError):
        densify(Creature(c.F, Fraction(5, 2)))


@given(st.lists(st.integers(0, 2), min_size=4, max_size=4))
def test_bigness_select_picks_heaviest(labels):
    F = characteristic(L01, (0,), 1)
    c = Creature(F, 0)
    parts = [weighted(L01, (0,), 1, {h: Fraction(1) for h, lab in zip(P0, labels) if lab == j}) for j in range(3)]
    j = bigness_select(c, parts)
    assert mass(parts[j]) == max(mass(p) for p in parts)
    assert mass(parts[j]) * 3 >= mass(F)
    assert nor_drop_leq(parts[j], F, 1)


def test_bigness_rejects_wrong_partition():
    c = Creature(characteristic(L01, (0,), 1), 0)
    with pytest.raises(ValueError):
        bigness_select(c, [characteristic(L01, (0,), 1, P0[:2])])
