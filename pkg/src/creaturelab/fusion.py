"""Finite-depth fusion: a tree of conditions with one splitting node per level.

Level i carries a condition p_i on the coordinates 0..i, one per node of
the i-th level of the splitting tree, in lexicographic order. Passing to
level i+1 duplicates p_i along the two maps g_{i,0}, g_{i,1} that send the
splitting node to its two children, and amalgamates the copies. Scheduled
oracles stand in for dense sets; scheduled names are pushed apart by
amalgamate_disjoint.
"""

from __future__ import annotations

import hashlib
import itertools
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .certs import FORMAT_VERSION, condition_data, content_hash, history_key
from .coding import KappaSeq, bounded_intersection
from .conditions import Condition, amalgamate, leq, lift, pos_of, project_condition, transfer
from .disjoint import BranchLabeling, NamePair, amalgamate_disjoint
from .norms import Creature, bigness_select, characteristic, weighted
from .params import ParamLadder
from .possibility import (
    HistorySeq,
    g_inv_f,
    histories,
    kappa_of,
    make_support,
    pos_enumerate,
    pos_index,
    restrict_history,
    succ_apply,
    witness_of,
)

__all__ = [
    "ExtractedBranch",
    "FusionPlan",
    "FusionTree",
    "NameTriple",
    "OracleRejected",
    "OracleSpec",
    "ScheduledName",
    "base_condition",
    "branch_nodes",
    "build_fusion",
    "extract_branch",
    "register_oracle",
    "sibling_witnesses",
]


class OracleRejected(ValueError):
    """An oracle returned something that is not an extension of its input."""


# --------------------------------------------------------------------------
# oracles


@dataclass(frozen=True)
class Oracle:
    """A dense-open-set surrogate on conditions with `width` coordinates."""

    ident: str
    width: int
    member: Callable[[Condition], bool]
    apply: Callable[[Condition], Condition]


ORACLES: dict[str, Callable[[ParamLadder, dict], Oracle]] = {}


def register_oracle(name: str):
    def deco(factory: Callable[[ParamLadder, dict], Oracle]):
        ORACLES[name] = factory
        return factory

    return deco


def _lowest_lift(p: Condition) -> Condition:
    nxt = pos_of(p, p.i + 1)
    return lift(p, min(nxt, key=lambda ys: pos_index(p.ladder, witness_of(ys, p.i))))


@register_oracle("lift")
def _lift_oracle(ladder: ParamLadder, params: dict) -> Oracle:
    """Dense set {p : i(p) >= to}; extends by the lowest-index successor."""
    to = int(params["to"])

    def member(p: Condition) -> bool:
        return p.i >= min(to, p.horizon)

    def apply(p: Condition) -> Condition:
        while not member(p):
            p = _lowest_lift(p)
        return p

    return Oracle("lift", int(params["width"]), member, apply)


def _bit_name(params: dict) -> Callable[[HistorySeq], int]:
    seed, tag = int(params["seed"]), params.get("tag", "")

    def bit(ys: HistorySeq) -> int:
        return hashlib.sha256(f"{seed}|{tag}|{history_key(ys)}".encode()).digest()[0] & 1

    return bit


@register_oracle("decide")
def _decide_oracle(ladder: ParamLadder, params: dict) -> Oracle:
    """Dense set of conditions deciding a seeded bit read off x restricted to level+1.

    Applying it lifts to the named level if needed, then keeps the heavier
    half of the creature there.
    """
    j = int(params["level"])
    bit = _bit_name(params)

    def member(p: Condition) -> bool:
        if p.i > j or j >= p.horizon:
            return True
        return len({bit(ys.prefix(j + 1)) for ys in pos_of(p, j + 1)}) == 1

    def apply(p: Condition) -> Condition:
        while p.i < j:
            p = _lowest_lift(p)
        if member(p):
            return p
        c = p.creature(j)
        parts = [c.F.masked(lambda h, b=b: bit(succ_apply(p.ladder, p.xs, h)) == b) for b in (0, 1)]
        keep = parts[bigness_select(c, parts)]
        F = weighted(p.ladder, c.u, c.level, keep.weights)
        creatures = list(p.creatures)
        creatures[0] = Creature(F, c.m)
        return Condition(p.ladder, p.u, p.xs, tuple(creatures), p.horizon)

    return Oracle("decide", int(params["width"]), member, apply)


@dataclass(frozen=True)
class OracleSpec:
    level: int
    ident: str
    params: tuple[tuple[str, object], ...]

    @classmethod
    def make(cls, at: int, ident: str, /, **params) -> OracleSpec:
        return cls(at, ident, tuple(sorted(params.items())))

    def build(self, ladder: ParamLadder) -> Oracle:
        if self.ident not in ORACLES:
            raise KeyError(f"unknown oracle {self.ident!r}")
        return ORACLES[self.ident](ladder, dict(self.params))

    def to_data(self) -> dict:
        return {"level": self.level, "id": self.ident, "params": dict(self.params)}


# --------------------------------------------------------------------------
# names


@dataclass(frozen=True)
class NameTriple:
    """(m, k, rho): a seeded name, on m coordinates, for a branch of the k-th tree."""

    m: int
    k: int
    seed: int
    tag: str = ""

    def __post_init__(self) -> None:
        if not 0 <= self.k < self.m:
            raise ValueError("need k < m")

    def labeling(self, ladder: ParamLadder, sub: Sequence[int], full: Sequence[int], level: int) -> BranchLabeling:
        """The name read on the coordinates `sub`, as a labeling of histories on `full`."""
        base = BranchLabeling.seeded(ladder, sub, level, self.seed, self.tag)
        sub = make_support(sub)
        return BranchLabeling(full, level, lambda ys: base(restrict_history(ys, sub)), base.name)

    def to_data(self) -> dict:
        return {"m": self.m, "k": self.k, "seed": self.seed, "tag": self.tag}


@dataclass(frozen=True)
class ScheduledName:
    level: int
    triple: NameTriple


# --------------------------------------------------------------------------
# plans and trees


@dataclass(frozen=True)
class FusionPlan:
    ladder: ParamLadder
    depth: int
    base: Condition
    splits: tuple[int, ...] = ()
    oracles: tuple[OracleSpec, ...] = ()
    names: tuple[ScheduledName, ...] = ()
    base_spec: dict | None = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "splits", tuple(self.splits) or (0,) * self.depth)
        object.__setattr__(self, "oracles", tuple(self.oracles))
        object.__setattr__(self, "names", tuple(self.names))
        if self.depth < 0 or len(self.splits) != self.depth:
            raise ValueError("one splitting position per level below the depth")
        for i, s in enumerate(self.splits):
            if not 0 <= s <= i:
                raise ValueError(f"split position {s} outside level {i}")
        if self.base.u != (0,):
            raise ValueError("the root condition lives on the single coordinate 0")
        seen = set()
        for o in self.oracles:
            if not 0 <= o.level <= self.depth:
                raise ValueError("oracle scheduled outside the tree")
            if (o.level, o.ident, o.params) in seen:
                raise ValueError("oracle scheduled twice at one level")
            seen.add((o.level, o.ident, o.params))
        for nm in self.names:
            if not 0 <= nm.level < self.depth:
                raise ValueError("names are scheduled at splitting levels")

    def to_data(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "ladder": self.ladder.spec(),
            "depth": self.depth,
            "horizon": self.base.horizon,
            "splits": list(self.splits),
            "oracles": [o.to_data() for o in self.oracles],
            "names": [{"level": n.level, **n.triple.to_data()} for n in self.names],
            "base": self.base_spec if self.base_spec is not None else {"hash": content_hash(condition_data(self.base))},
        }

    @classmethod
    def from_data(cls, data: dict, enum_cap: int | None = None) -> FusionPlan:
        ladder = ParamLadder.parse(data["ladder"], enum_cap)
        spec = dict(data.get("base", {}))
        spec.setdefault("horizon", data.get("horizon", ladder.levels))
        base = base_condition(ladder, **spec)
        return cls(
            ladder,
            int(data["depth"]),
            base,
            tuple(data.get("splits", ())),
            tuple(OracleSpec.make(o["level"], o["id"], **o.get("params", {})) for o in data.get("oracles", ())),
            tuple(
                ScheduledName(n["level"], NameTriple(n["m"], n["k"], n["seed"], n.get("tag", "")))
                for n in data.get("names", ())
            ),
            base_spec=spec,
        )


def base_condition(
    ladder: ParamLadder, i: int = 2, horizon: int | None = None, history_index: int = 0,
    size: int | None = None, seed: int = 0,
) -> Condition:
    """A root condition on coordinate 0: the history_index-th member of S_{{0},i} and
    characteristic creatures, each on a seeded sample of `size` points (all points when None)."""
    H = ladder.levels if horizon is None else horizon
    xs = histories(ladder, (0,), i)[history_index]
    rng = random.Random(seed)
    creatures = []
    for j in range(i, H):
        space = pos_enumerate(ladder, (0,), j)
        pick = space if size is None or size >= len(space) else rng.sample(space, size)
        creatures.append(Creature(characteristic(ladder, (0,), j, pick), 0))
    return Condition(ladder, (0,), xs, tuple(creatures), H)


def split_maps(i: int, s: int) -> tuple[dict[int, int], dict[int, int]]:
    """g_{i,0}, g_{i,1}: positions of level i into level i+1, the split node s going to s + l."""
    g0 = {m: m if m <= s else m + 1 for m in range(i + 1)}
    g1 = {m: m if m < s else m + 1 for m in range(i + 1)}
    return g0, g1


def tree_strings(splits: Sequence[int]) -> list[list[str]]:
    """Nodes of each level of the splitting tree, lexicographically."""
    levels = [[""]]
    for s in splits:
        nxt = []
        for m, eta in enumerate(levels[-1]):
            nxt.extend([eta + "0", eta + "1"] if m == s else [eta + "0"])
        levels.append(nxt)
    return levels


@dataclass
class SiblingPair:
    """A scheduled name pair and the leaves its two coordinates descend to."""

    level: int
    name_index: tuple[int, int]
    subs: tuple[tuple[int, ...], tuple[int, ...]]  # name coordinates at level+1
    alphas: tuple[int, int]
    leaf_subs: tuple[tuple[int, ...], tuple[int, ...]]  # the same at the depth
    leaf_alphas: tuple[int, int]
    triples: tuple[NameTriple, NameTriple]


@dataclass
class FusionTree:
    plan: FusionPlan
    levels: list[Condition]
    maps: list[tuple[dict[int, int], dict[int, int]]]
    clause_i: list[tuple[bool, bool]]
    oracle_log: list[dict]
    name_log: list[dict]
    siblings: list[SiblingPair]

    @property
    def depth(self) -> int:
        return self.plan.depth

    def nodes(self) -> list[tuple[int, int, str]]:
        return [(i, m, eta) for i, lvl in enumerate(tree_strings(self.plan.splits)) for m, eta in enumerate(lvl)]

    def node_condition(self, level: int, position: int) -> Condition:
        return project_condition(self.levels[level], (position,))

    @property
    def passed(self) -> bool:
        return (
            all(all(c) for c in self.clause_i)
            and all(o["met"] for o in self.oracle_log if not o.get("skipped"))
            and all(n["passed"] for n in self.name_log)
        )

    def to_data(self) -> dict:
        strings = tree_strings(self.plan.splits)
        return {
            "format": FORMAT_VERSION,
            "plan": self.plan.to_data(),
            "levels": [
                {"i": i, "support": list(p.u), "i_p": p.i, "hash": content_hash(condition_data(p))}
                for i, p in enumerate(self.levels)
            ],
            "nodes": [
                {"level": i, "position": m, "eta": eta, "hash": content_hash(condition_data(self.node_condition(i, m)))}
                for i, lvl in enumerate(strings)
                for m, eta in enumerate(lvl)
            ],
            "clause_i": [list(c) for c in self.clause_i],
            "oracles": self.oracle_log,
            "names": self.name_log,
            "passed": self.passed,
        }


def _forward(pos: int, splits: Sequence[int], start: int) -> int:
    """Follow a coordinate from level `start` to the depth, taking the left child at later splits."""
    for s in splits[start:]:
        if pos > s:
            pos += 1
    return pos


def build_fusion(plan: FusionPlan, *, desk_fallback: bool | None = None) -> FusionTree:
    lad = plan.ladder
    p = plan.base
    levels: list[Condition] = []
    maps = []
    clause_i = []
    oracle_log: list[dict] = []
    name_log: list[dict] = []
    siblings: list[SiblingPair] = []
    for i in range(plan.depth + 1):
        for spec in plan.oracles:
            if spec.level != i:
                continue
            orc = spec.build(lad)
            entry = {"level": i, "id": spec.ident, "params": dict(spec.params)}
            if orc.width != len(p.u):
                entry.update(skipped=True, reason=f"width {orc.width} != {len(p.u)} coordinates")
                oracle_log.append(entry)
                continue
            out = orc.apply(p)
            if out.u != p.u or out.horizon != p.horizon or not leq(p, out):
                raise OracleRejected(f"oracle {spec.ident} at level {i} did not extend its input")
            p = out
            entry.update(skipped=False, met=orc.member(p), i_p=p.i)
            oracle_log.append(entry)
        levels.append(p)
        if i == plan.depth:
            break
        s = plan.splits[i]
        g0, g1 = split_maps(i, s)
        maps.append((g0, g1))
        c0, c1 = transfer(p, g0), transfer(p, g1)
        pairs = _name_pairs(plan, i, s, c0, c1)
        if pairs:
            res = amalgamate_disjoint(c0, c1, [np for np, _ in pairs], desk_fallback=desk_fallback)
            nxt = res.q
            name_log.append({
                "level": i,
                "pairs": len(pairs),
                "checks": [c.to_data() for c in res.checks],
                "skipped": [list(x) for x in res.skipped],
                "methods": sorted({r.method for r in res.corollaries.values()}),
                "passed": res.passed,
            })
            for np, meta in pairs:
                subs = meta["subs"]
                siblings.append(SiblingPair(
                    i, meta["index"], subs, (np.alpha1, np.alpha2),
                    tuple(tuple(_forward(a, plan.splits, i + 1) for a in sub) for sub in subs),
                    (_forward(np.alpha1, plan.splits, i + 1), _forward(np.alpha2, plan.splits, i + 1)),
                    meta["triples"],
                ))
        else:
            nxt = amalgamate(c0, c1).q
        clause_i.append((
            leq(c0, project_condition(nxt, c0.u)),
            leq(c1, project_condition(nxt, c1.u)),
        ))
        p = nxt
    return FusionTree(plan, levels, maps, clause_i, oracle_log, name_log, siblings)


def _name_pairs(plan: FusionPlan, i: int, s: int, c0: Condition, c1: Condition):
    """Every (u_0, u_1, j_0, j_1) with the split node at the k-th place of u_l."""
    sched = [(j, nm.triple) for j, nm in enumerate(plan.names) if nm.level == i]
    g0, g1 = split_maps(i, s)
    out = []
    for (j0, t0), (j1, t1) in itertools.product(sched, repeat=2):
        for u0 in _subsets_with(i, s, t0):
            for u1 in _subsets_with(i, s, t1):
                sub0 = tuple(g0[a] for a in u0)
                sub1 = tuple(g1[a] for a in u1)
                levels = range(c0.i, c0.horizon)
                H1 = {lv: t0.labeling(plan.ladder, sub0, c0.u, lv) for lv in levels}
                H2 = {lv: t1.labeling(plan.ladder, sub1, c1.u, lv) for lv in levels}
                np = NamePair(g0[s], g1[s], H1, H2)
                out.append((np, {"index": (j0, j1), "subs": (sub0, sub1), "triples": (t0, t1)}))
    return out


def _subsets_with(i: int, s: int, t: NameTriple):
    for u in itertools.combinations(range(i + 1), t.m):
        if s in u and u.index(s) == t.k:
            yield u


# --------------------------------------------------------------------------
# extraction


@dataclass
class ExtractedBranch:
    leaf: int
    eta: str
    history: HistorySeq
    kappas: dict[int, KappaSeq]


def extract_from_condition(p: Condition, ordinals: Sequence[int] | None = None) -> dict[int, KappaSeq]:
    ordinals = p.u if ordinals is None else ordinals
    return {a: KappaSeq(p.ladder, kappa_of(p.xs, a)) for a in ordinals}


def extract_branch(tree: FusionTree, leaf: int | str) -> ExtractedBranch:
    """The realized history of the deepest condition and kappa for each coordinate."""
    strings = tree_strings(tree.plan.splits)[-1]
    if isinstance(leaf, str):
        if leaf not in strings:
            raise KeyError(f"{leaf!r} is not a leaf")
        leaf = strings.index(leaf)
    if not 0 <= leaf < len(strings):
        raise KeyError(f"leaf {leaf} below an unbuilt node")
    p = tree.levels[-1]
    return ExtractedBranch(leaf, strings[leaf], p.xs, extract_from_condition(p))


def branch_nodes(kappa: KappaSeq, level: int, top: int) -> list[int]:
    """The branch of t_kappa through (level, top): its predecessors at every lower level."""
    n = kappa.ladder.n
    image = kappa.perms[level](top)
    return [
        kappa.perms[j].images.index(image >> (n[level] - n[j])) for j in range(level)
    ] + [top]


def sibling_witnesses(tree: FusionTree, exhaustive: bool = True) -> list[dict]:
    """For each sibling pair and each full-horizon history reachable from the last condition,
    a bounded-intersection witness: either the branches part for good below the top
    ("diverge"), or they meet at the top with differing g^-1 f images ("cones")."""
    p = tree.levels[-1]
    lad = p.ladder
    H = p.horizon
    full = pos_of(p, H) if p.i < H else [p.xs]
    if not exhaustive:
        full = full[:1]
    out = []
    for sp in tree.siblings:
        level = H - 1
        t0, t1 = sp.triples
        for xs in full:
            kap = extract_from_condition(Condition(lad, p.u, xs, (), H), sp.leaf_alphas)
            e0 = t0.labeling(lad, sp.leaf_subs[0], p.u, level)(xs.prefix(level + 1))
            e1 = t1.labeling(lad, sp.leaf_subs[1], p.u, level)(xs.prefix(level + 1))
            b0 = branch_nodes(kap[sp.leaf_alphas[0]], level, e0)
            b1 = branch_nodes(kap[sp.leaf_alphas[1]], level, e1)
            y = xs[level]
            apart = g_inv_f(y, sp.leaf_alphas[0], e0) != g_inv_f(y, sp.leaf_alphas[1], e1)
            a = bounded_intersection(b0, b1, sealed_top=apart)
            kind = "none" if a is None else "cones" if a == level else "diverge"
            out.append({"level": sp.level, "leaves": list(sp.leaf_alphas), "witness": a, "kind": kind,
                        "branches": [b0, b1]})
    return out
