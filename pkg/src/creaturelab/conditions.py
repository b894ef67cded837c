"""Forcing conditions of Q_u truncated at a finite horizon.

A condition p carries a history x_p of length i(p) and one creature for
each level i(p) <= j < H. The infinite tail and its divergence demand are
replaced by the horizon H plus a recorded norm profile.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .coding import is_delta_system, op_map
from .norms import (
    Creature,
    WeightedPos,
    density,
    cylinder,
    extend_restriction,
    nor1,
    nor2,
    nor_drop_leq,
    product,
    restrict_weighted,
    set_of,
    sigma_member,
)
from .params import ParamLadder
from .possibility import (
    CreatureObject,
    HistorySeq,
    PosFunc,
    Support,
    make_support,
    pos_index,
    restrict_history,
    restrict_pos,
    succ_apply,
    witness_of,
)

__all__ = [
    "Condition",
    "LevelName",
    "amalgamate",
    "complete_lift",
    "decide",
    "leq",
    "lift",
    "pos_of",
    "proj_creature",
    "proj_equal",
    "project_condition",
    "transfer",
]


@dataclass(frozen=True)
class Condition:
    ladder: ParamLadder
    u: Support
    xs: HistorySeq
    creatures: tuple[Creature, ...]
    horizon: int
    i: int = field(init=False, repr=False, compare=False)
    _proj: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", make_support(self.u))
        object.__setattr__(self, "creatures", tuple(self.creatures))
        object.__setattr__(self, "i", len(self.xs))
        if self.xs.u != self.u:
            raise ValueError("history support differs from the condition's")
        if not len(self.xs) <= self.horizon <= self.ladder.levels:
            raise ValueError("need i(p) <= horizon <= ladder levels")
        if len(self.creatures) != self.horizon - len(self.xs):
            raise ValueError("one creature per level from i(p) to the horizon")
        for j, c in enumerate(self.creatures, start=len(self.xs)):
            if c.level != j or c.u != self.u:
                raise ValueError(f"creature at position {j} has the wrong level or support")

    def creature(self, j: int) -> Creature:
        if not self.i <= j < self.horizon:
            raise IndexError(f"no creature at level {j}")
        return self.creatures[j - self.i]

    def norm_profile(self) -> list[float]:
        return [nor2(c) for c in self.creatures]

    def profile_nondecreasing(self) -> bool:
        prof = self.norm_profile()
        return all(a <= b + 1e-12 for a, b in zip(prof, prof[1:]))

    def is_valid(self, tol: float = 1e-9) -> bool:
        return all(c.in_cr(tol) for c in self.creatures)


def leq(p: Condition, q: Condition) -> bool:
    """p <= q, i.e. q is stronger: prefix, witnessed steps, Sigma at the remaining levels."""
    if p.u != q.u:
        raise ValueError("support mismatch")
    if p.horizon != q.horizon:
        raise ValueError("horizon mismatch")
    pi, qi = p.i, q.i
    if qi < pi or q.xs.entries[:pi] != p.xs.entries:
        return False
    pc, qc = p.creatures, q.creatures
    for j in range(pi, qi):
        if witness_of(q.xs, j) not in pc[j - pi].F.weights:
            return False
    return all(sigma_member(qc[j - qi], pc[j - pi]) for j in range(qi, q.horizon))


def pos_of(p: Condition, j: int) -> list[HistorySeq]:
    """Histories of length j reachable from x_p through the supports of the creatures."""
    if not p.i <= j <= p.horizon:
        raise ValueError("length out of range")
    layer = [p.xs]
    for lvl in range(p.i, j):
        hs = sorted(set_of(p.creature(lvl).F), key=lambda h: pos_index(p.ladder, h))
        layer = [succ_apply(p.ladder, xs, h) for xs in layer for h in hs]
    return layer


def lift(p: Condition, xs: HistorySeq) -> Condition:
    """p^[x] for x in pos(p)."""
    if len(xs) < p.i or xs.entries[: p.i] != p.xs.entries:
        raise ValueError("history does not extend x_p")
    for j in range(p.i, len(xs)):
        if witness_of(xs, j) not in p.creature(j).F.weights:
            raise ValueError(f"step {j} of the history is not in pos(p)")
    return Condition(p.ladder, p.u, xs, p.creatures[len(xs) - p.i:], p.horizon)


# --------------------------------------------------------------------------
# projections


def proj_creature(c: Creature, u: Sequence[int]) -> Creature:
    return Creature(restrict_weighted(c.F, u), c.m)


def proj_equal(c1: Creature, c2: Creature, w: Sequence[int]) -> bool:
    """proj_w(c1) = proj_w(c2); for empty w this means equal norms and equal m."""
    w = make_support(w)
    if w:
        return proj_creature(c1, w).F == proj_creature(c2, w).F and c1.m == c2.m
    if c1.m != c2.m:
        return False
    if c1.level == c2.level and density(c1.F) == density(c2.F):
        return True
    return abs(nor2(c1) - nor2(c2)) <= 1e-12


def project_condition(q: Condition, u: Sequence[int]) -> Condition:
    """j_{u,v}(q): restrict the history and average each creature, m unchanged."""
    u = make_support(u)
    if not u:
        raise ValueError("projection to the empty support")
    if u == q.u:
        return q
    hit = q._proj.get(u)
    if hit is None:
        hit = q._proj[u] = Condition(
            q.ladder, u, restrict_history(q.xs, u), tuple(proj_creature(c, u) for c in q.creatures), q.horizon
        )
    return hit


def cylinder_condition(p: Condition, v: Sequence[int], xs: HistorySeq) -> Condition:
    """A condition on v projecting onto p, with creatures lifted by F(h) = F_p(h|u).

    xs must be a history on v restricting to x_p.
    """
    v = make_support(v)
    if restrict_history(xs, p.u) != p.xs:
        raise ValueError("history does not restrict to x_p")
    return Condition(p.ladder, v, xs, tuple(Creature(cylinder(c.F, v), c.m) for c in p.creatures), p.horizon)


def complete_lift(q: Condition, u: Sequence[int], r: Condition) -> Condition:
    """q1 >= q on v with proj_u(q1) >= r, given proj_u(q) <= r.

    History steps take the lowest-index witness extending r's step; creatures
    use extend_restriction with m taken from r.
    """
    u = make_support(u)
    if r.u != u or not set(u) <= set(q.u):
        raise ValueError("r must live on a subset of q's support")
    if q.horizon != r.horizon:
        raise ValueError("horizon mismatch")
    if not leq(project_condition(q, u), r):
        raise ValueError("r does not extend the projection of q")
    xs = q.xs
    for j in range(q.i, r.i):
        target = witness_of(r.xs, j)
        cands = [h for h in q.creature(j).F.weights if restrict_pos(h, u) == target]
        if not cands:
            raise LookupError(f"no extension of r's step {j} inside set(F_q)")
        h = min(cands, key=lambda e: pos_index(q.ladder, e))
        xs = succ_apply(q.ladder, xs, h)
    creatures = []
    for j in range(r.i, q.horizon):
        cq, cr = q.creature(j), r.creature(j)
        F3 = cr.F if u == q.u else extend_restriction(cq.F, cr.F)
        creatures.append(Creature(F3, max(cq.m, cr.m)))
    return Condition(q.ladder, q.u, xs, tuple(creatures), q.horizon)


# --------------------------------------------------------------------------
# transfer


def _relabel_pos(h: PosFunc, u2: Support) -> PosFunc:
    return PosFunc(u2, h.level, h.pairs)


def _relabel_weighted(F: WeightedPos, u2: Support) -> WeightedPos:
    return WeightedPos(F.ladder, u2, F.level, {_relabel_pos(h, u2): v for h, v in F.weights.items()}, F.flavor)


def _relabel_history(xs: HistorySeq, u2: Support) -> HistorySeq:
    return HistorySeq(u2, tuple(CreatureObject(x.level, u2, x.f, x.g, x.e) for x in xs.entries))


def transfer(p: Condition, h: Mapping[int, int]) -> Condition:
    """Image of p under an order isomorphism h from u onto h[u].

    Data is stored in support order, so relabelling only swaps the support.
    """
    if set(h) != set(p.u):
        raise ValueError("h must be defined exactly on the support")
    image = [h[a] for a in p.u]
    if len(set(image)) != len(image) or image != sorted(image):
        raise ValueError("h must be an order-preserving injection")
    u2 = tuple(image)
    return Condition(
        p.ladder,
        u2,
        _relabel_history(p.xs, u2),
        tuple(Creature(_relabel_weighted(c.F, u2), c.m) for c in p.creatures),
        p.horizon,
    )


# --------------------------------------------------------------------------
# amalgamation


def _union_object(x1: CreatureObject, x2: CreatureObject, u: Support) -> CreatureObject:
    fs, gs, es = [], [], []
    for a in u:
        parts = []
        for x in (x1, x2):
            if a in x.u:
                j = x.u.index(a)
                parts.append((x.f[j], x.g[j], x.e[j]))
        if len(parts) == 2 and parts[0] != parts[1]:
            raise ValueError(f"histories disagree at ordinal {a}")
        fa, ga, ea = parts[0]
        fs.append(fa)
        gs.append(ga)
        es.append(ea)
    return CreatureObject(x1.level, u, tuple(fs), tuple(gs), tuple(es))


def union_history(x1: HistorySeq, x2: HistorySeq) -> HistorySeq:
    if len(x1) != len(x2):
        raise ValueError("histories must have equal length")
    u = make_support(x1.u + x2.u)
    return HistorySeq(u, tuple(_union_object(a, b, u) for a, b in zip(x1.entries, x2.entries)))


@dataclass
class AmalgamationReport:
    q: Condition
    dominates: tuple[bool, bool]
    norm_drop_ok: list[bool | None]  # None where k_i < 3 (reported, not asserted)
    nor1_drop: list[float]

    @property
    def passed(self) -> bool:
        return all(self.dominates) and all(v is not False for v in self.norm_drop_ok)


def amalgamate(p1: Condition, p2: Condition) -> AmalgamationReport:
    """Union of histories and product creatures with shared m, for a Delta-system pair."""
    if not is_delta_system(p1.u, p2.u):
        raise ValueError("supports do not form a Delta-system pair")
    if transfer(p1, op_map(p1.u, p2.u)) != p2:
        raise ValueError("p2 is not the transfer of p1")
    if p1.i != p2.i or p1.horizon != p2.horizon:
        raise ValueError("conditions must share i(p) and horizon")
    u = make_support(p1.u + p2.u)
    xs = union_history(p1.xs, p2.xs)
    creatures = []
    for c1, c2 in zip(p1.creatures, p2.creatures):
        F = product(c1.F, c2.F)
        creatures.append(Creature(F, c1.m))
    q = Condition(p1.ladder, u, xs, tuple(creatures), p1.horizon)
    dom = (leq(p1, project_condition(q, p1.u)), leq(p2, project_condition(q, p2.u)))
    drops, ok = [], []
    for j, (cq, c1) in enumerate(zip(q.creatures, p1.creatures), start=q.i):
        drops.append(nor1(c1) - nor1(cq) if not cq.F.is_zero() else float("inf"))
        if p1.ladder.k[j] >= 3:
            ok.append(not cq.F.is_zero() and nor_drop_leq(cq.F, c1.F, 1))
        else:
            ok.append(None)
    return AmalgamationReport(q, dom, ok, drops)


# --------------------------------------------------------------------------
# names


@dataclass(frozen=True)
class LevelName:
    """A continuously read name: tables H_i on S_{u,i+1} for the declared levels."""

    u: Support
    tables: Mapping[int, Mapping[HistorySeq, object]] = field(hash=False)

    @classmethod
    def from_rule(
        cls, u: Sequence[int], levels: Iterable[int], rule: Callable[[HistorySeq], object],
        domains: Mapping[int, Iterable[HistorySeq]],
    ) -> LevelName:
        u = make_support(u)
        tables = {i: {restrict_history(y, u): rule(restrict_history(y, u)) for y in domains[i]} for i in levels}
        return cls(u, tables)


def decide(name: LevelName, xs: HistorySeq, i: int | None = None) -> object:
    """H_i(x|(i+1) restricted to the name's support); i defaults to length(x) - 1."""
    if i is None:
        i = len(xs) - 1
    if i not in name.tables:
        raise KeyError(f"level {i} outside the name's declared range")
    if len(xs) < i + 1:
        raise ValueError("history too short to decide this level")
    key = restrict_history(xs.prefix(i + 1), name.u)
    return name.tables[i][key]
