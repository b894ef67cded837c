"""Disjointification of branch labels.

The single step refines a balanced pair (F1, F2) so that two labelings
either never agree on set(F1 * F2) or agree through a function of the core
w = u1 cap u2. The level loop runs the step once per history of length i,
the corollary runs the loop twice to push agreement into disjoint cones,
and amalgamate_disjoint does this for every scheduled name pair and level.
"""

from __future__ import annotations

import hashlib
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

from .certs import content_hash, frac, history_key, weighted_data
from .conditions import (
    Condition,
    _relabel_history,
    leq,
    pos_of,
    project_condition,
    proj_equal,
    union_history,
)
from .norms import (
    Creature,
    WeightedPos,
    _geq_power,
    density,
    is_balanced,
    mass,
    nor0_of_ratio,
    nor2,
    product,
    product_mass,
    sigma_member,
)
from .params import ParamLadder
from .possibility import (
    HistorySeq,
    PosFunc,
    Support,
    cone_disjointness,
    g_inv_f,
    histories,
    iter_pos,
    join_pos,
    make_support,
    pos_count,
    pos_index,
    restrict_history,
    restrict_pos,
    succ_apply,
)

__all__ = [
    "BranchLabeling",
    "CorollaryResult",
    "DisjointAmalgamation",
    "LevelResult",
    "NamePair",
    "ObstructionReport",
    "StepResult",
    "amalgamate_disjoint",
    "coincidence_fraction",
    "coincidence_fraction_part2",
    "disjoint_label_split",
    "disjointify_creatures",
    "disjointify_level",
    "disjointify_step",
    "nor_zero_obstruction",
    "reduce_part2",
    "threshold_fires",
    "verify_level",
    "verify_step",
]

ZERO = Fraction(0)
LabelFn = Mapping[PosFunc, Hashable] | Callable[[PosFunc], Hashable]


def _fn(H: LabelFn) -> Callable[[PosFunc], Hashable]:
    return H.__getitem__ if isinstance(H, Mapping) else H


def _core_of(F1: WeightedPos, F2: WeightedPos) -> Support:
    return tuple(a for a in F1.u if a in F2.u)


def _check_pair_shape(F1: WeightedPos, F2: WeightedPos) -> Support:
    if F1.level != F2.level or F1.ladder != F2.ladder:
        raise ValueError("F1 and F2 must share ladder and level")
    d1 = set(F1.u) - set(F2.u)
    d2 = set(F2.u) - set(F1.u)
    if len(d1) != len(d2) or not d1:
        raise ValueError("need |u1 - u2| = |u2 - u1| != 0")
    return _core_of(F1, F2)


# --------------------------------------------------------------------------
# the single step


@dataclass(frozen=True)
class CoreTag:
    core: int  # canonical index of g in pos^w_i
    k: Fraction
    iota: int  # 1..5, or 0 for a fallback split
    m1: int
    m2: int

    def to_data(self) -> dict:
        return {"core": self.core, "k": frac(self.k), "iota": self.iota, "m1": self.m1, "m2": self.m2}


@dataclass
class StepResult:
    F1: WeightedPos
    F2: WeightedPos
    mode: str  # "alpha" or "beta"
    half: str  # "G1", "G2", or "split" for the fallback
    H_prime: dict[PosFunc, Hashable]
    tags: list[CoreTag]
    labels: tuple
    fallback: bool = False

    @property
    def F(self) -> WeightedPos:
        return product(self.F1, self.F2)

    def to_data(self) -> dict:
        return {
            "mode": self.mode,
            "half": self.half,
            "fallback": self.fallback,
            "tags": [t.to_data() for t in self.tags],
            "H_prime": sorted([pos_index(self.F1.ladder, g), repr(v)] for g, v in self.H_prime.items()),
            "mass1": frac(mass(self.F1)),
            "mass2": frac(mass(self.F2)),
            "out1": content_hash(weighted_data(self.F1)),
            "out2": content_hash(weighted_data(self.F2)),
        }


def _group(F: WeightedPos, w: Support, H, index: Mapping[Hashable, int]):
    """core g -> list of (h, weight, label index)."""
    out: dict[PosFunc, list[tuple[PosFunc, Fraction, int]]] = defaultdict(list)
    for h, v in F.weights.items():
        s = H(h)
        if s not in index:
            raise ValueError(f"label {s!r} outside the declared label set")
        out[restrict_pos(h, w)].append((h, v, index[s]))
    return out


def _median(arr: Sequence[Fraction], k: Fraction) -> int:
    """Least m with k^<_{m+1} >= k/2 and k^>=_m >= k/2."""
    below = ZERO
    for m, v in enumerate(arr):
        if below + v >= k / 2 and k - below >= k / 2:
            return m
        below += v
    raise AssertionError("no median label; masses do not sum to k")


def _classify(arr1, arr2, k) -> tuple[int, int, int, Callable[[int], bool], Callable[[int], bool]]:
    m1, m2 = _median(arr1, k), _median(arr2, k)
    big1 = arr1[m1] >= k / 4
    big2 = arr2[m2] >= k / 4
    if big1 and big2:
        return 1, m1, m2, (lambda s: s == m1), (lambda s: s == m2)
    if big1:
        return 2, m1, m2, (lambda s: s == m1), (lambda s: s != m1)
    if big2:
        return 3, m1, m2, (lambda s: s != m2), (lambda s: s == m2)
    if m1 <= m2:
        return 4, m1, m2, (lambda s: s < m1), (lambda s: s >= m1)
    return 5, m1, m2, (lambda s: s >= m2), (lambda s: s < m2)


def _equalize(part1: dict, part2: dict) -> tuple[dict, dict]:
    """Scale the heavier side down uniformly so both masses agree."""
    s1 = sum(part1.values(), ZERO)
    s2 = sum(part2.values(), ZERO)
    if s1 > s2:
        c = s2 / s1
        part1 = {h: v * c for h, v in part1.items()}
    elif s2 > s1:
        c = s1 / s2
        part2 = {h: v * c for h, v in part2.items()}
    return part1, part2


def disjointify_step(
    F1: WeightedPos, F2: WeightedPos, H1: LabelFn, H2: LabelFn, labels: Sequence[Hashable] | None = None
) -> StepResult:
    """One application of the case analysis; labels lists S in canonical order.

    When labels is omitted S is the sorted set of label values met on the
    supports. Only points of set(F_l) are ever labelled.
    """
    w = _check_pair_shape(F1, F2)
    if F1.is_zero() or F2.is_zero():
        raise ValueError("zero mass")
    if not is_balanced(F1, F2):
        raise ValueError("the pair is not balanced")
    f1, f2 = _fn(H1), _fn(H2)
    if labels is None:
        labels = sorted({f1(h) for h in F1.weights} | {f2(h) for h in F2.weights})
    labels = tuple(labels)
    index = {s: j for j, s in enumerate(labels)}
    if len(index) != len(labels):
        raise ValueError("repeated label")
    g1, g2 = _group(F1, w, f1, index), _group(F2, w, f2, index)
    if set(g1) != set(g2):
        raise AssertionError("balanced pair with different core sets")
    lad = F1.ladder
    cores = sorted(g1, key=lambda g: pos_index(lad, g))
    per_core = {}
    tags = []
    for g in cores:
        arr1 = [ZERO] * len(labels)
        arr2 = [ZERO] * len(labels)
        for _, v, s in g1[g]:
            arr1[s] += v
        for _, v, s in g2[g]:
            arr2[s] += v
        k = sum(arr1, ZERO)
        if k != sum(arr2, ZERO):
            raise AssertionError("k_{1,g} != k_{2,g} for a balanced pair")
        iota, m1, m2, keep1, keep2 = _classify(arr1, arr2, k)
        star1 = {h: v for h, v, s in g1[g] if keep1(s)}
        star2 = {h: v for h, v, s in g2[g] if keep2(s)}
        per_core[g] = (*_equalize(star1, star2), iota, m1, m2, k)
        tags.append(CoreTag(pos_index(lad, g), k, iota, m1, m2))
    total = mass(F1)
    first = [g for g in cores if per_core[g][2] == 1 and per_core[g][3] == per_core[g][4]]
    chosen_first = sum((per_core[g][5] for g in first), ZERO) * 2 >= total
    chosen = first if chosen_first else [g for g in cores if g not in set(first)]
    w1: dict[PosFunc, Fraction] = {}
    w2: dict[PosFunc, Fraction] = {}
    for g in chosen:
        w1.update(per_core[g][0])
        w2.update(per_core[g][1])
    out1 = WeightedPos(lad, F1.u, F1.level, w1)
    out2 = WeightedPos(lad, F2.u, F2.level, w2)
    if chosen_first:
        Hp = {g: labels[per_core[g][3]] for g in cores}
        return StepResult(out1, out2, "beta", "G1", Hp, tags, labels)
    return StepResult(out1, out2, "alpha", "G2", {}, tags, labels)


def disjoint_label_split(
    F1: WeightedPos, F2: WeightedPos, H1: LabelFn, H2: LabelFn, labels: Sequence[Hashable]
) -> StepResult | None:
    """Per core, keep label sets A (side 1) and B (side 2) with A, B disjoint.

    A is chosen to maximize mass1(A) * mass2(B) with B the side-2 labels
    outside A; the first maximizer in subset order wins. Cores where
    no disjoint split carries mass on both sides are dropped. Returns None
    when every core is dropped.
    """
    w = _check_pair_shape(F1, F2)
    f1, f2 = _fn(H1), _fn(H2)
    labels = tuple(labels)
    index = {s: j for j, s in enumerate(labels)}
    g1, g2 = _group(F1, w, f1, index), _group(F2, w, f2, index)
    lad = F1.ladder
    w1: dict[PosFunc, Fraction] = {}
    w2: dict[PosFunc, Fraction] = {}
    tags = []
    for g in sorted(g1, key=lambda g: pos_index(lad, g)):
        m1: dict[int, Fraction] = defaultdict(Fraction)
        m2: dict[int, Fraction] = defaultdict(Fraction)
        for _, v, s in g1[g]:
            m1[s] += v
        for _, v, s in g2.get(g, ()):
            m2[s] += v
        present = sorted(m1)
        best, best_A = ZERO, None
        for r in range(1, len(present) + 1):
            for A in itertools.combinations(present, r):
                a = sum((m1[s] for s in A), ZERO)
                b = sum((v for s, v in m2.items() if s not in A), ZERO)
                if a * b > best:
                    best, best_A = a * b, set(A)
        k = sum(m1.values(), ZERO)
        if best_A is None:
            tags.append(CoreTag(pos_index(lad, g), k, 0, -1, -1))
            continue
        s1 = {h: v for h, v, s in g1[g] if s in best_A}
        s2 = {h: v for h, v, s in g2[g] if s not in best_A}
        s1, s2 = _equalize(s1, s2)
        w1.update(s1)
        w2.update(s2)
        tags.append(CoreTag(pos_index(lad, g), k, 0, min(best_A), len(best_A)))
    if not w1:
        return None
    out1 = WeightedPos(lad, F1.u, F1.level, w1)
    out2 = WeightedPos(lad, F2.u, F2.level, w2)
    return StepResult(out1, out2, "alpha", "split", {}, tags, labels, fallback=True)


def _fiber_labels(F: WeightedPos, w: Support, H) -> dict[PosFunc, set]:
    out: dict[PosFunc, set] = defaultdict(set)
    for h in F.weights:
        out[restrict_pos(h, w)].add(H(h))
    return out


def verify_step(F1: WeightedPos, F2: WeightedPos, H1: LabelFn, H2: LabelFn, res: StepResult) -> dict[str, bool]:
    """Clauses (a)-(e) for a step result, through the core fibers of set(F)."""
    w = _core_of(F1, F2)
    f1, f2 = _fn(H1), _fn(H2)
    L1 = _fiber_labels(res.F1, w, f1)
    L2 = _fiber_labels(res.F2, w, f2)
    common = set(L1) & set(L2)
    if res.mode == "alpha":
        e = all(not (L1[g] & L2[g]) for g in common)
    else:
        e = all(L1[g] == L2[g] == {res.H_prime[g]} for g in common)
    return {
        "a": product_mass(res.F1, res.F2) > 0,
        "b": res.F1.leq(F1) and res.F2.leq(F2),
        "c": is_balanced(res.F1, res.F2),
        "d": 8 * mass(res.F1) >= mass(F1) and 8 * mass(res.F2) >= mass(F2),
        "e": e,
    }


# --------------------------------------------------------------------------
# branch labelings


@dataclass(frozen=True)
class BranchLabeling:
    """H: S_{u,i+1} -> labels, given by a rule and memoized."""

    u: Support
    level: int
    rule: Callable[[HistorySeq], int] = field(compare=False, repr=False)
    name: str = "anonymous"

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", make_support(self.u))
        object.__setattr__(self, "_memo", {})

    def __call__(self, ys: HistorySeq) -> int:
        if ys.u != self.u or len(ys) != self.level + 1:
            raise ValueError(f"{self.name}: expects histories of length {self.level + 1} on {self.u}")
        memo = self._memo  # type: ignore[attr-defined]
        if ys not in memo:
            memo[ys] = self.rule(ys)
        return memo[ys]

    def table(self, domain: Sequence[HistorySeq]) -> dict[HistorySeq, int]:
        return {ys: self(ys) for ys in domain}

    def relabel(self, u2: Sequence[int]) -> BranchLabeling:
        """The same labeling read on another support of the same size."""
        u2 = make_support(u2)
        if len(u2) != len(self.u):
            raise ValueError("support size mismatch")
        src = self.u
        return BranchLabeling(u2, self.level, lambda ys: self(_relabel_history(ys, src)), self.name)

    @classmethod
    def seeded(cls, ladder: ParamLadder, u, level: int, seed: int, tag: str = "") -> BranchLabeling:
        """Pseudo-random labels in ^{n_level}2 from sha256 of (seed, tag, history)."""
        bits = ladder.width(level)

        def rule(ys: HistorySeq) -> int:
            digest = hashlib.sha256(f"{seed}|{tag}|{history_key(ys)}".encode()).digest()
            return int.from_bytes(digest[:8], "big") % (1 << bits)

        return cls(u, level, rule, f"seeded({seed},{tag})")

    @classmethod
    def constant(cls, u, level: int, value: int) -> BranchLabeling:
        return cls(u, level, lambda ys: value, f"const({value})")


# --------------------------------------------------------------------------
# the level loop


HKey = tuple[HistorySeq, HistorySeq]


@dataclass
class LevelResult:
    F1: WeightedPos
    F2: WeightedPos
    h1: dict[HKey, int]
    h2: dict[HKey, int]
    steps: list[StepResult]
    listing: list[HistorySeq]
    conflicts: int

    @property
    def F(self) -> WeightedPos:
        return product(self.F1, self.F2)

    @property
    def k_star(self) -> int:
        return len(self.listing)

    def to_data(self) -> dict:
        return {
            "k_star": self.k_star,
            "steps": [s.to_data() for s in self.steps],
            "modes": "".join("b" if s.mode == "beta" else "a" for s in self.steps),
            "h_conflicts": self.conflicts,
            "mass1": frac(mass(self.F1)),
            "mass2": frac(mass(self.F2)),
        }


StepOverride = Callable[[int, HistorySeq, WeightedPos, WeightedPos, dict, dict, StepResult], StepResult]


def _label_map(ladder, cache: dict, H: BranchLabeling, x: HistorySeq, F: WeightedPos) -> dict[PosFunc, int]:
    table = cache.setdefault(x, {})
    for h in F.weights:
        if h not in table:
            table[h] = H(succ_apply(ladder, x, h))
    return {h: table[h] for h in F.weights}


def disjointify_level(
    F1: WeightedPos,
    F2: WeightedPos,
    H1: BranchLabeling,
    H2: BranchLabeling,
    *,
    step_override: StepOverride | None = None,
) -> LevelResult:
    """Run the step over the canonical listing of S_{u,i}, u = u1 cup u2."""
    w = _check_pair_shape(F1, F2)
    lad, i = F1.ladder, F1.level
    if H1.u != F1.u or H2.u != F2.u or H1.level != i or H2.level != i:
        raise ValueError("labelings must live on S_{u_l,i+1} for the supports of F_l")
    if not is_balanced(F1, F2):
        raise ValueError("the pair is not balanced")
    u = make_support(F1.u + F2.u)
    listing = histories(lad, u, i)
    labels = tuple(range(1 << lad.width(i)))
    cache1: dict = {}
    cache2: dict = {}
    cur1, cur2 = F1, F2
    steps = []
    for k, xs in enumerate(listing):
        x1, x2 = restrict_history(xs, F1.u), restrict_history(xs, F2.u)
        lab1 = _label_map(lad, cache1, H1, x1, cur1)
        lab2 = _label_map(lad, cache2, H2, x2, cur2)
        res = disjointify_step(cur1, cur2, lab1, lab2, labels)
        if step_override is not None:
            res = step_override(k, xs, cur1, cur2, lab1, lab2, res)
        steps.append(res)
        cur1, cur2 = res.F1, res.F2
    h1: dict[HKey, int] = {}
    h2: dict[HKey, int] = {}
    conflicts = 0
    realized = {restrict_pos(h, w) for h in cur1.weights}
    for xs, res in zip(listing, steps):
        if res.mode != "beta":
            continue
        xw = restrict_history(xs, w)
        x1, x2 = restrict_history(xs, F1.u), restrict_history(xs, F2.u)
        for g in realized:
            yw = succ_apply(lad, xw, g)
            val = res.H_prime[g]
            for hmap, key in ((h1, (x1, yw)), (h2, (x2, yw))):
                if key in hmap and hmap[key] != val:
                    conflicts += 1
                hmap.setdefault(key, val)
    return LevelResult(cur1, cur2, h1, h2, steps, listing, conflicts)


def _truth_pattern(L1: Mapping[PosFunc, set], L2: Mapping[PosFunc, set]) -> tuple[bool, bool]:
    """(some pair in set(F) has equal labels, some pair has unequal labels)."""
    eq = neq = False
    for g in set(L1) & set(L2):
        a, b = L1[g], L2[g]
        if a & b:
            eq = True
        if not (len(a) == len(b) == 1 and a == b):
            neq = True
    return eq, neq


def verify_level(
    res: LevelResult, F1: WeightedPos, F2: WeightedPos, H1: BranchLabeling, H2: BranchLabeling,
    a: Fraction | None = None,
) -> dict[str, object]:
    """Clauses (alpha)-(delta); labels are recomputed from scratch."""
    lad, i = F1.ladder, F1.level
    w = _core_of(F1, F2)
    u = make_support(F1.u + F2.u)
    ks = res.k_star
    if a is None:
        a = min(density(F1), density(F2))
    bound = a**3 / 2 ** (9 * ks + 3)
    dens = product_mass(res.F1, res.F2) / pos_count(lad, u, i)
    gamma = delta = True
    patterns = []
    for xs in res.listing:
        x1, x2 = restrict_history(xs, F1.u), restrict_history(xs, F2.u)
        xw = restrict_history(xs, w)
        L1: dict[PosFunc, set] = defaultdict(set)
        L2: dict[PosFunc, set] = defaultdict(set)
        for h in res.F1.weights:
            L1[restrict_pos(h, w)].add(H1(succ_apply(lad, x1, h)))
        for h in res.F2.weights:
            L2[restrict_pos(h, w)].add(H2(succ_apply(lad, x2, h)))
        eq, neq = _truth_pattern(L1, L2)
        patterns.append("mixed" if eq and neq else "equal" if eq else "unequal" if neq else "empty")
        if eq and neq:
            delta = False
        for g in set(L1) & set(L2):
            shared = L1[g] & L2[g]
            if not shared:
                continue
            yw = succ_apply(lad, xw, g)
            v1 = res.h1.get((x1, yw))
            v2 = res.h2.get((x2, yw))
            if not all(v1 == v2 == s for s in shared):
                gamma = False
    return {
        "alpha": (
            res.F1.leq(F1) and res.F2.leq(F2)
            and 8**ks * mass(res.F1) >= mass(F1) and 8**ks * mass(res.F2) >= mass(F2)
            and is_balanced(res.F1, res.F2)
        ),
        "beta": dens >= bound,
        "gamma": gamma,
        "delta": delta,
        "h_consistent": res.conflicts == 0,
        "patterns": patterns,
        "density": dens,
        "density_bound": bound,
    }


# --------------------------------------------------------------------------
# the counting obstruction


def threshold_fires(k: int, d: int) -> bool:
    """2^d >= k^(3^k - 1), the regime where the counting bound forces nor0 = 0."""
    return _geq_power(Fraction(2) ** d, k, 3**k - 1)


@dataclass
class CoincidenceReport:
    fractions: list[Fraction]  # one per h0 in pos^{u - alpha}_i, canonical order
    bound: Fraction

    @property
    def max(self) -> Fraction:
        return max(self.fractions)

    @property
    def within_bound(self) -> bool:
        return all(f <= self.bound for f in self.fractions)


def _coincides(y, alpha: int, eta1: int, eta2: int) -> bool:
    return g_inv_f(y, alpha, eta1) == eta2


def coincidence_fraction(
    ladder: ParamLadder, i: int, u, alpha: int, xs: HistorySeq,
    rule1: Callable[[PosFunc], int], rule2: Callable[[PosFunc], int],
) -> CoincidenceReport:
    """Exact fraction, per fixed h0 = h restricted to u - {alpha}, of extensions h with
    (g_y(alpha)^-1 o f_y(alpha))(rule1(h0)) = rule2(h0), y the new top of suc_x(h)."""
    if i <= 0:
        raise ValueError("the obstruction needs i > 0")
    u = make_support(u)
    if alpha not in u or xs.u != u or len(xs) != i:
        raise ValueError("need alpha in u and x in S_{u,i}")
    rest = tuple(a for a in u if a != alpha)
    top = 1 << ladder.width(i)
    ext = list(iter_pos(ladder, (alpha,), i))
    memo: dict[tuple[int, int], Fraction] = {}
    fractions = []
    for h0 in iter_pos(ladder, rest, i):
        e1, e2 = rule1(h0), rule2(h0)
        if not (isinstance(e1, int) and isinstance(e2, int) and 0 <= e1 < top and 0 <= e2 < top):
            raise ValueError("rules must return strings in ^{n_i}2")
        if (e1, e2) not in memo:
            hits = sum(
                _coincides(succ_apply(ladder, xs, join_pos(h0, ha))[i], alpha, e1, e2) for ha in ext
            )
            memo[(e1, e2)] = Fraction(hits, len(ext))
        fractions.append(memo[(e1, e2)])
    bound = Fraction(1, 2 ** (ladder.width(i) - ladder.width(i - 1)))
    return CoincidenceReport(fractions, bound)


def reduce_part2(
    ladder: ParamLadder, u, w, alpha1: int, alpha2: int, xs: HistorySeq,
    rule1: Callable[[HistorySeq, HistorySeq], int], rule2: Callable[[HistorySeq, HistorySeq], int],
) -> tuple[Callable[[PosFunc], int], Callable[[PosFunc], int]]:
    """Part-(1) rules on pos^{u - alpha1}_i from part-(2) rules read on (x, y restricted to w)."""
    u, w = make_support(u), make_support(w)
    if alpha1 == alpha2 or alpha1 in w or alpha2 in w or not {alpha1, alpha2} <= set(u):
        raise ValueError("need distinct alpha1, alpha2 in u - w")
    rest = tuple(a for a in u if a != alpha1)
    x_rest = restrict_history(xs, rest)
    i = len(xs)

    def r1(e: PosFunc) -> int:
        ye = succ_apply(ladder, x_rest, e)
        return rule1(xs, restrict_history(ye, w))

    def r2(e: PosFunc) -> int:
        ye = succ_apply(ladder, x_rest, e)
        return g_inv_f(ye[i], alpha2, rule2(xs, restrict_history(ye, w)))

    return r1, r2


def coincides_part2(ladder, xs, h, w, alpha1, alpha2, rule1, rule2) -> bool:
    ys = succ_apply(ladder, xs, h)
    yw = restrict_history(ys, w)
    y = ys[len(xs)]
    return g_inv_f(y, alpha1, rule1(xs, yw)) == g_inv_f(y, alpha2, rule2(xs, yw))


def coincidence_fraction_part2(ladder, i, u, w, alpha1, alpha2, xs, rule1, rule2) -> CoincidenceReport:
    r1, r2 = reduce_part2(ladder, u, w, alpha1, alpha2, xs, rule1, rule2)
    return coincidence_fraction(ladder, i, u, alpha1, xs, r1, r2)


class ObstructionViolation(AssertionError):
    """The counting argument failed where its threshold holds: a bug signal."""


@dataclass
class ObstructionReport:
    hypothesis: bool
    fires: bool
    exact_zero: bool
    density: Fraction
    counting_bound: Fraction  # 2^-(n_i - n_{i-1})
    counting_ok: bool | None  # density <= counting_bound, checked when the hypothesis holds

    def to_data(self) -> dict:
        return {
            "hypothesis": self.hypothesis,
            "fires": self.fires,
            "exact_zero": self.exact_zero,
            "density": frac(self.density),
            "counting_bound": frac(self.counting_bound),
            "counting_ok": self.counting_ok,
        }


def _obstruction_report(ladder: ParamLadder, i: int, hyp: bool, dens: Fraction) -> ObstructionReport:
    k = ladder.k[i]
    d = ladder.width(i) - ladder.width(i - 1)
    fires = threshold_fires(k, d)
    zero = nor0_of_ratio(k, k / dens).exact_zero
    bound = Fraction(1, 2**d)
    rep = ObstructionReport(hyp, fires, zero, dens, bound, (dens <= bound) if hyp else None)
    if hyp and rep.counting_ok is False:
        raise ObstructionViolation("density exceeds the counting bound under the hypothesis")
    if hyp and fires and not zero:
        raise ObstructionViolation("threshold holds but nor0 is not exactly zero")
    return rep


def nor_zero_obstruction(
    c: Creature, xs: HistorySeq, alpha: int,
    rule1: Callable[[PosFunc], int], rule2: Callable[[PosFunc], int],
) -> ObstructionReport:
    """Check the part-(1) hypothesis on set(F_c) and the nor0 = 0 conclusion when it applies."""
    lad, i = c.F.ladder, c.level
    if i <= 0:
        raise ValueError("the obstruction needs i > 0")
    rest = tuple(a for a in c.u if a != alpha)
    hyp = all(
        _coincides(succ_apply(lad, xs, h)[i], alpha, rule1(restrict_pos(h, rest)), rule2(restrict_pos(h, rest)))
        for h in c.F.weights
    )
    return _obstruction_report(lad, i, hyp, density(c.F))


# --------------------------------------------------------------------------
# the creature corollary


@dataclass
class CorollaryResult:
    d1: Creature
    d2: Creature
    pass1: LevelResult
    pass2: LevelResult
    beta_steps: list[int]
    fallback_steps: list[int]
    stuck_steps: list[int]
    obstructions: dict[int, ObstructionReport]
    clauses: dict[str, bool | None]
    guaranteed: bool
    method: str = "two-pass"

    @property
    def passed(self) -> bool:
        keys = ["alpha", "gamma", "sigma"] + (["beta"] if self.guaranteed else [])
        return all(self.clauses[k] for k in keys)

    def to_data(self) -> dict:
        return {
            "pass1": self.pass1.to_data(),
            "pass2": self.pass2.to_data(),
            "beta_steps": self.beta_steps,
            "fallback_steps": self.fallback_steps,
            "stuck_steps": self.stuck_steps,
            "obstructions": {str(k): v.to_data() for k, v in self.obstructions.items()},
            "clauses": self.clauses,
            "regime": "guaranteed" if self.guaranteed else "observed",
            "method": self.method,
            "d1": {"mass": frac(mass(self.d1.F)), "m": frac(self.d1.m)},
            "d2": {"mass": frac(mass(self.d2.F)), "m": frac(self.d2.m)},
        }


def _derived_labeling(
    lad: ParamLadder, H: BranchLabeling, alpha: int, w: Support, hmap: Mapping[HKey, int]
) -> BranchLabeling:
    i = H.level

    def rule(ys: HistorySeq) -> int:
        eta = hmap.get((ys.prefix(i), restrict_history(ys, w)), 0)
        return g_inv_f(ys[i], alpha, eta)

    return BranchLabeling(H.u, i, rule, f"derived({H.name},{alpha})")


def _side_values(lad, F, x, H, alpha, i):
    """h -> (eta, (g^-1 f)(eta) at alpha) over set(F)."""
    out = {}
    for h in F.weights:
        ys = succ_apply(lad, x, h)
        eta = H(ys)
        out[h] = (eta, g_inv_f(ys[i], alpha, eta))
    return out


def corollary_gamma(
    F1: WeightedPos, F2: WeightedPos, H1: BranchLabeling, H2: BranchLabeling, alpha1: int, alpha2: int,
) -> tuple[bool, list[int]]:
    """(gamma) over every x in S_{u,i} and every h in set(F1 * F2), through core fibers.

    Returns the verdict and the listing indices where it fails.
    """
    lad, i = F1.ladder, F1.level
    w = _core_of(F1, F2)
    u = make_support(F1.u + F2.u)
    bad = []
    for k, xs in enumerate(histories(lad, u, i)):
        v1 = _side_values(lad, F1, restrict_history(xs, F1.u), H1, alpha1, i)
        v2 = _side_values(lad, F2, restrict_history(xs, F2.u), H2, alpha2, i)
        s1: dict[PosFunc, set] = defaultdict(set)
        s2: dict[PosFunc, set] = defaultdict(set)
        for h, val in v1.items():
            s1[restrict_pos(h, w)].add(val)
        for h, val in v2.items():
            s2[restrict_pos(h, w)].add(val)
        if any(s1[g] & s2[g] for g in set(s1) & set(s2)):
            bad.append(k)
    return not bad, bad


def _composite_loop(
    F1: WeightedPos, F2: WeightedPos, H1: BranchLabeling, H2: BranchLabeling, alpha1: int, alpha2: int,
) -> tuple[WeightedPos, WeightedPos, list[StepResult | None], list[int]]:
    """Desk repair: per history, split on the pair (eta, (g^-1 f)(eta)) directly.

    A step is skipped when no pair of points shares that composite label;
    otherwise disjoint_label_split removes every shared composite label.
    Returns the outputs, the per-history steps and the stuck indices.
    """
    lad, i = F1.ladder, F1.level
    u = make_support(F1.u + F2.u)
    side = 1 << lad.width(i)
    labels = tuple((a, b) for a in range(side) for b in range(side))
    cur1, cur2 = F1, F2
    steps: list[StepResult | None] = []
    stuck: list[int] = []
    w = _core_of(F1, F2)
    for k, xs in enumerate(histories(lad, u, i)):
        v1 = _side_values(lad, cur1, restrict_history(xs, F1.u), H1, alpha1, i)
        v2 = _side_values(lad, cur2, restrict_history(xs, F2.u), H2, alpha2, i)
        s1: dict[PosFunc, set] = defaultdict(set)
        s2: dict[PosFunc, set] = defaultdict(set)
        for h, val in v1.items():
            s1[restrict_pos(h, w)].add(val)
        for h, val in v2.items():
            s2[restrict_pos(h, w)].add(val)
        if not any(s1[g] & s2[g] for g in set(s1) & set(s2)):
            steps.append(None)
            continue
        res = disjoint_label_split(cur1, cur2, v1, v2, labels)
        if res is None:
            stuck.append(k)
            steps.append(None)
            continue
        steps.append(res)
        cur1, cur2 = res.F1, res.F2
    return cur1, cur2, steps, stuck


def _biclique_repair(
    F1: WeightedPos, F2: WeightedPos, H1: BranchLabeling, H2: BranchLabeling, alpha1: int, alpha2: int,
    seeds: int = 16,
) -> tuple[WeightedPos, WeightedPos] | None:
    """Desk repair over all histories at once.

    Per core g, h1 and h2 clash when some history gives them the same
    (eta, (g^-1 f)(eta)). Grow a clash-free pair of sets from each of the
    first few clash-free seed pairs and keep the heaviest; the masses are
    then equalized per core. None when no core has a clash-free pair.
    """
    lad, i = F1.ladder, F1.level
    w = _core_of(F1, F2)
    u = make_support(F1.u + F2.u)
    sig1: dict[PosFunc, set] = defaultdict(set)
    sig2: dict[PosFunc, set] = defaultdict(set)
    for k, xs in enumerate(histories(lad, u, i)):
        for h, val in _side_values(lad, F1, restrict_history(xs, F1.u), H1, alpha1, i).items():
            sig1[h].add((k, val))
        for h, val in _side_values(lad, F2, restrict_history(xs, F2.u), H2, alpha2, i).items():
            sig2[h].add((k, val))
    fib1: dict[PosFunc, list[PosFunc]] = defaultdict(list)
    fib2: dict[PosFunc, list[PosFunc]] = defaultdict(list)
    for h in sorted(F1.weights, key=lambda h: pos_index(lad, h)):
        fib1[restrict_pos(h, w)].append(h)
    for h in sorted(F2.weights, key=lambda h: pos_index(lad, h)):
        fib2[restrict_pos(h, w)].append(h)
    w1: dict[PosFunc, Fraction] = {}
    w2: dict[PosFunc, Fraction] = {}
    for g in sorted(set(fib1) & set(fib2), key=lambda g: pos_index(lad, g)):
        a_side, b_side = fib1[g], fib2[g]
        ok = {(a, b) for a in a_side for b in b_side if not sig1[a] & sig2[b]}
        best, best_sets = ZERO, None
        for a0, b0 in sorted(ok, key=lambda ab: (-F1(ab[0]) * F2(ab[1]), pos_index(lad, ab[0]), pos_index(lad, ab[1])))[:seeds]:
            A, B = [a0], [b0]
            for a in a_side:
                if a != a0 and all((a, b) in ok for b in B):
                    A.append(a)
            for b in b_side:
                if b != b0 and all((a, b) in ok for a in A):
                    B.append(b)
            val = sum((F1(a) for a in A), ZERO) * sum((F2(b) for b in B), ZERO)
            if val > best:
                best, best_sets = val, (A, B)
        if best_sets is None:
            continue
        s1, s2 = _equalize({a: F1(a) for a in best_sets[0]}, {b: F2(b) for b in best_sets[1]})
        w1.update(s1)
        w2.update(s2)
    if not w1:
        return None
    return WeightedPos(lad, F1.u, i, w1), WeightedPos(lad, F2.u, i, w2)


def disjointify_creatures(
    c1: Creature, c2: Creature, H1: BranchLabeling, H2: BranchLabeling, alpha1: int, alpha2: int,
    *, desk_fallback: bool | None = None,
) -> CorollaryResult:
    """Two passes of the level loop; d_l = (F''_l, m_{c_l}).

    Away from paper scale the agreement case of the second pass is not
    excluded by the counting bound, and (gamma) can fail. With desk_fallback
    on (the default off paper scale) such a result is replaced by the
    composite split run from c_l; the result records which method won.
    """
    F1, F2 = c1.F, c2.F
    w = _check_pair_shape(F1, F2)
    lad, i = F1.ladder, F1.level
    if not (alpha1 in F1.u and alpha1 not in F2.u and alpha2 in F2.u and alpha2 not in F1.u):
        raise ValueError("need alpha1 in u1 - u2 and alpha2 in u2 - u1")
    if i <= 1:
        raise ValueError("the corollary needs level i > 1")
    if not proj_equal(c1, c2, w):
        raise ValueError("proj_w(c1) != proj_w(c2)")
    guaranteed = lad.paper_scale
    if desk_fallback is None:
        desk_fallback = not guaranteed
    pass1 = disjointify_level(F1, F2, H1, H2)
    D1 = _derived_labeling(lad, H1, alpha1, w, pass1.h1)
    D2 = _derived_labeling(lad, H2, alpha2, w, pass1.h2)
    pass2 = disjointify_level(pass1.F1, pass1.F2, D1, D2)
    beta_steps = [k for k, s in enumerate(pass2.steps) if s.mode == "beta"]
    u = make_support(F1.u + F2.u)
    obstructions = {}
    for k in beta_steps:
        xs = pass2.listing[k]
        hyp = _hypothesis_part2(lad, pass2.F1, pass2.F2, xs, w, alpha1, alpha2, pass1.h1, pass1.h2)
        dens = product_mass(pass2.F1, pass2.F2) / pos_count(lad, u, i)
        obstructions[k] = _obstruction_report(lad, i, hyp, dens)
    out1, out2 = pass2.F1, pass2.F2
    gamma, bad = corollary_gamma(out1, out2, H1, H2, alpha1, alpha2)
    method, stuck, fallback_steps = "two-pass", [], []
    if not gamma and desk_fallback:
        r1, r2, steps, stuck = _composite_loop(F1, F2, H1, H2, alpha1, alpha2)
        fallback_steps = [k for k, s in enumerate(steps) if s is not None]
        g2, bad2 = corollary_gamma(r1, r2, H1, H2, alpha1, alpha2)
        if g2 or len(bad2) < len(bad):
            out1, out2, gamma, method, bad = r1, r2, g2, "composite", bad2
        if not gamma:
            rep = _biclique_repair(F1, F2, H1, H2, alpha1, alpha2)
            if rep is not None:
                g3, _ = corollary_gamma(*rep, H1, H2, alpha1, alpha2)
                if g3:
                    (out1, out2), gamma, method = rep, True, "biclique"
    d1 = Creature(out1, c1.m)
    d2 = Creature(out2, c2.m)
    beta = all(nor2(d) >= nor2(c) - 1 - 1e-9 for d, c in ((d1, c1), (d2, c2)))
    clauses = {
        "alpha": proj_equal(d1, d2, w),
        "beta": beta,
        "gamma": gamma,
        "sigma": sigma_member(d1, c1) and sigma_member(d2, c2),
        "in_cr": d1.in_cr() and d2.in_cr(),
    }
    return CorollaryResult(
        d1, d2, pass1, pass2, beta_steps, fallback_steps, stuck, obstructions, clauses, guaranteed, method
    )


def _hypothesis_part2(lad, F1, F2, xs, w, alpha1, alpha2, h1, h2) -> bool:
    """Does (g^-1 f)(alpha1)(h1(..)) = (g^-1 f)(alpha2)(h2(..)) hold on all of set(F1 * F2)?"""
    i = len(xs)
    x1, x2 = restrict_history(xs, F1.u), restrict_history(xs, F2.u)
    xw = restrict_history(xs, w)
    vals: list[dict[PosFunc, set]] = []
    for F, x, alpha, hmap in ((F1, x1, alpha1, h1), (F2, x2, alpha2, h2)):
        acc: dict[PosFunc, set] = defaultdict(set)
        for h in F.weights:
            g = restrict_pos(h, w)
            ys = succ_apply(lad, x, h)
            eta = hmap.get((x, succ_apply(lad, xw, g)), 0)
            acc[g].add(g_inv_f(ys[i], alpha, eta))
        vals.append(acc)
    a, b = vals
    return all(len(a[g]) == 1 and a[g] == b[g] for g in set(a) & set(b))


# --------------------------------------------------------------------------
# amalgamation with disjoint branches


@dataclass(frozen=True)
class NamePair:
    """Branch names for alpha1 (on u1) and alpha2 (on u2), one labeling per level."""

    alpha1: int
    alpha2: int
    H1: Mapping[int, BranchLabeling] = field(hash=False)
    H2: Mapping[int, BranchLabeling] = field(hash=False)


@dataclass
class ForcedCheck:
    name: int
    level: int
    histories: int
    equal: int
    premise_failures: int
    cone_checked: int
    cone_failures: int

    @property
    def ok(self) -> bool:
        return self.premise_failures == 0 and self.cone_failures == 0

    def to_data(self) -> dict:
        return dict(self.__dict__)


@dataclass
class DisjointAmalgamation:
    q: Condition
    q1: Condition
    q2: Condition
    corollaries: dict[tuple[int, int], CorollaryResult]
    checks: list[ForcedCheck]
    dominates: tuple[bool, bool]
    skipped: list[tuple[int, str]]

    @property
    def passed(self) -> bool:
        return (
            all(self.dominates)
            and all(c.ok for c in self.checks)
            and all(r.passed for r in self.corollaries.values())
        )

    def to_data(self) -> dict:
        return {
            "dominates": list(self.dominates),
            "checks": [c.to_data() for c in self.checks],
            "skipped": [list(s) for s in self.skipped],
            "corollaries": {f"{i}:{m}": r.to_data() for (i, m), r in sorted(self.corollaries.items())},
            "passed": self.passed,
        }


def _validate_schedule(schedule: Sequence[int], start: int, paper_scale: bool) -> None:
    if not schedule or schedule[0] != start:
        raise ValueError("schedule must start at i(p)")
    for a, b in zip(schedule, schedule[1:]):
        if b <= a or (paper_scale and b <= a + 10):
            raise ValueError("schedule must increase (by more than 10 at paper scale)")


def amalgamate_disjoint(
    p1: Condition, p2: Condition, names: Sequence[NamePair], schedule: Sequence[int] | None = None,
    *, desk_fallback: bool | None = None,
) -> DisjointAmalgamation:
    """Shrink the creatures level by level so every scheduled name pair is forced apart."""
    lad = p1.ladder
    u1, u2 = p1.u, p2.u
    if len(u1) != len(u2) or len(set(u1) - set(u2)) != len(set(u2) - set(u1)):
        raise ValueError("supports must have equal size and equal differences")
    if p1.i != p2.i or p1.horizon != p2.horizon:
        raise ValueError("conditions must share i(p) and horizon")
    w = tuple(a for a in u1 if a in u2)
    if restrict_history(p1.xs, w) != restrict_history(p2.xs, w):
        raise ValueError("histories disagree on the common support")
    for c1, c2 in zip(p1.creatures, p2.creatures):
        if not proj_equal(c1, c2, w):
            raise ValueError(f"proj_w differs at level {c1.level}")
    start, H = p1.i, p1.horizon
    if schedule is None:
        step = 11 if lad.paper_scale else 1
        schedule = [start + step * m for m in range(max(len(names), 1))]
    schedule = list(schedule)
    _validate_schedule(schedule, start, lad.paper_scale)
    if len(schedule) < len(names):
        raise ValueError("schedule shorter than the name list")
    for m, nm in enumerate(names):
        if nm.alpha1 not in set(u1) - set(u2) or nm.alpha2 not in set(u2) - set(u1):
            raise ValueError(f"name pair {m}: ordinals outside u1 - w, u2 - w")
        for i in range(schedule[m], H):
            if i not in nm.H1 or i not in nm.H2:
                raise ValueError(f"name family gap: pair {m} at level {i}")
    cors: dict[tuple[int, int], CorollaryResult] = {}
    skipped: list[tuple[int, str]] = []
    new1, new2 = [], []
    for i in range(start, H):
        c1, c2 = p1.creature(i), p2.creature(i)
        active = [m for m in range(len(names)) if schedule[m] <= i]
        if active and i <= 1:
            skipped.append((i, "corollary needs level > 1"))
            active = []
        for m in active:
            nm = names[m]
            r = disjointify_creatures(c1, c2, nm.H1[i], nm.H2[i], nm.alpha1, nm.alpha2, desk_fallback=desk_fallback)
            cors[(i, m)] = r
            c1, c2 = r.d1, r.d2
        new1.append(c1)
        new2.append(c2)
    q1 = Condition(lad, u1, p1.xs, tuple(new1), H)
    q2 = Condition(lad, u2, p2.xs, tuple(new2), H)
    u = make_support(u1 + u2)
    xs = union_history(p1.xs, p2.xs)
    q = Condition(lad, u, xs, tuple(Creature(product(a.F, b.F), a.m) for a, b in zip(new1, new2)), H)
    dom = (leq(p1, project_condition(q, u1)), leq(p2, project_condition(q, u2)))
    checks = [
        _forced_check(q, m, nm, i)
        for m, nm in enumerate(names)
        for i in range(schedule[m], H)
        if i > 1
    ]
    return DisjointAmalgamation(q, q1, q2, cors, checks, dom, skipped)


def _forced_check(q: Condition, m: int, nm: NamePair, i: int) -> ForcedCheck:
    """Equal labels at level i must come with differing g^-1 f images, hence disjoint cones."""
    lad = q.ladder
    u1, u2 = nm.H1[i].u, nm.H2[i].u
    ys_all = pos_of(q, i + 1)
    equal = premise_bad = 0
    agreeing: list[tuple[HistorySeq, int, int]] = []
    for ys in ys_all:
        e1 = nm.H1[i](restrict_history(ys, u1))
        e2 = nm.H2[i](restrict_history(ys, u2))
        if e1 != e2:
            continue
        equal += 1
        if g_inv_f(ys[i], nm.alpha1, e1) == g_inv_f(ys[i], nm.alpha2, e2):
            premise_bad += 1
        agreeing.append((ys, e1, e2))
    cone_checked = cone_bad = 0
    if i + 1 < q.horizon and agreeing:
        prefixes = {ys for ys, _, _ in agreeing}
        lab = {ys: (e1, e2) for ys, e1, e2 in agreeing}
        for zs in pos_of(q, q.horizon):
            head = zs.prefix(i + 1)
            if head not in prefixes:
                continue
            e1, e2 = lab[head]
            premise, disjoint = cone_disjointness(lad, zs, nm.alpha1, nm.alpha2, i, e1, e2)
            cone_checked += 1
            if premise and not disjoint:
                cone_bad += 1
    return ForcedCheck(m, i, len(ys_all), equal, premise_bad, cone_checked, cone_bad)
