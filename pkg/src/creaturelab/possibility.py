"""Objects OB^u_i, histories S_{u,i}, possibilities pos^u_i and the trees t_{x,alpha}.

Supports are sorted tuples of naturals standing in for ordinals. Every map
indexed by a support stores its values in the support's order, and e-tables
are indexed by the rank of their key permutation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .params import (
    LevelPerm,
    ParamLadder,
    all_perms,
    compatible_perms,
    fiber_extension,
    perm_rank,
)

Support = tuple[int, ...]
Pair = tuple[LevelPerm, LevelPerm]

__all__ = [
    "CreatureObject",
    "HistorySeq",
    "LeveledTree",
    "PosFunc",
    "Support",
    "cone_disjointness",
    "cone_of",
    "domain_points",
    "empty_history",
    "extract_e",
    "g_inv_f",
    "history_from_e",
    "histories",
    "is_history",
    "is_successor",
    "join_pos",
    "kappa_of",
    "make_object",
    "make_support",
    "pos_count",
    "pos_enumerate",
    "pos_index",
    "restrict_history",
    "restrict_obj",
    "restrict_pos",
    "succ_apply",
    "tree_less",
    "tree_of",
]


def make_support(ordinals) -> Support:
    if type(ordinals) is tuple:
        return _tuple_support(ordinals)
    return tuple(sorted(set(int(a) for a in ordinals)))


@lru_cache(maxsize=4096)
def _tuple_support(ordinals: tuple) -> Support:
    return tuple(sorted(set(int(a) for a in ordinals)))


def _indices(u: Support, w: Support) -> tuple[int, ...]:
    pos = {a: j for j, a in enumerate(u)}
    try:
        return tuple(pos[a] for a in w)
    except KeyError as exc:
        raise ValueError(f"{tuple(w)} is not a subset of {tuple(u)}") from exc


def _key_width(ladder: ParamLadder, i: int) -> int:
    return ladder.width(i - 1)


# --------------------------------------------------------------------------
# objects and histories


@dataclass(frozen=True, eq=True)
class CreatureObject:
    """An element x of OB^u_i: maps f, g and the e-table, one entry per alpha in u."""

    level: int
    u: Support
    f: tuple[LevelPerm, ...]
    g: tuple[LevelPerm, ...]
    e: tuple[tuple[Pair, ...], ...]

    def __post_init__(self) -> None:
        if not (len(self.f) == len(self.g) == len(self.e) == len(self.u)):
            raise ValueError("f, g, e must have one entry per member of u")
        object.__setattr__(self, "_hash", hash((self.level, self.u, self.f, self.g, self.e)))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    def _j(self, alpha: int) -> int:
        try:
            return self.u.index(alpha)
        except ValueError:
            raise ValueError(f"{alpha} not in support {self.u}") from None

    def f_at(self, alpha: int) -> LevelPerm:
        return self.f[self._j(alpha)]

    def g_at(self, alpha: int) -> LevelPerm:
        return self.g[self._j(alpha)]

    def e_at(self, alpha: int, key: LevelPerm) -> Pair:
        return self.e[self._j(alpha)][perm_rank(key)]


@dataclass(frozen=True, eq=True)
class HistorySeq:
    """x = <x_l : l < j>, an element of S_{u,j}."""

    u: Support
    entries: tuple[CreatureObject, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((self.u, self.entries)))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, j: int) -> CreatureObject:
        return self.entries[j]

    def prefix(self, j: int) -> HistorySeq:
        return HistorySeq(self.u, self.entries[:j])

    def last_g(self, alpha: int) -> LevelPerm:
        """g_{x_{i-1}}(alpha), or the width-0 identity for the empty history."""
        if not self.entries:
            return LevelPerm.identity(0)
        return self.entries[-1].g_at(alpha)


def empty_history(u: Sequence[int]) -> HistorySeq:
    return HistorySeq(make_support(u), ())


def make_object(
    ladder: ParamLadder,
    i: int,
    u: Sequence[int],
    f: Sequence[LevelPerm],
    g: Sequence[LevelPerm],
    e: Sequence[dict[int, Pair]] | None = None,
) -> tuple[CreatureObject, list[tuple[int, int]]]:
    """Build an object, completing missing e-table keys by the fiber-identity default.

    Returns the object and the list of (alpha, key rank) that were defaulted.
    A defaulted key k maps to the pair (ext(k), ext(k)), ext being the
    compatible extension acting as the identity inside each fiber.
    """
    u = make_support(u)
    keys = all_perms(_key_width(ladder, i))
    width = ladder.width(i)
    table = []
    defaulted = []
    for j, alpha in enumerate(u):
        given = e[j] if e is not None else {}
        row = []
        for r, key in enumerate(keys):
            if r in given:
                row.append(given[r])
            else:
                ext = fiber_extension(key, width)
                row.append((ext, ext))
                defaulted.append((alpha, r))
        table.append(tuple(row))
    obj = CreatureObject(i, u, tuple(f), tuple(g), tuple(table))
    _validate_object(ladder, obj)
    return obj, defaulted


def _validate_object(ladder: ParamLadder, x: CreatureObject) -> None:
    width = ladder.width(x.level)
    prev = ladder.width(x.level - 1)
    d = width - prev
    nkeys = math.factorial(1 << prev)
    for fa, ga, ea in zip(x.f, x.g, x.e):
        if fa.width != width or ga.width != width:
            raise ValueError("object perms must have width n_i")
        if len(ea) != nkeys:
            raise ValueError("e-table must be total over Per(^{n_{i-1}} 2)")
        for rho in range(1 << width):
            if fa(rho) >> d != ga(rho) >> d:
                raise ValueError("f and g disagree after restriction to n_{i-1}")


def is_successor(ladder: ParamLadder, x: CreatureObject, y: CreatureObject) -> bool:
    """y in suc(x): g_x(alpha)(rho|n_i) = f_y(alpha)(rho)|n_i and e_y(alpha)(g_x(alpha)) = (f_y, g_y)."""
    if x.u != y.u:
        raise ValueError("support mismatch")
    if y.level != x.level + 1:
        raise ValueError("y must sit one level above x")
    d = ladder.width(y.level) - ladder.width(x.level)
    for j in range(len(x.u)):
        gx, fy = x.g[j], y.f[j]
        if any(gx(rho >> d) != fy(rho) >> d for rho in range(1 << fy.width)):
            return False
        if y.e[j][perm_rank(gx)] != (y.f[j], y.g[j]):
            return False
    return True


def is_history(ladder: ParamLadder, xs: HistorySeq) -> bool:
    """Membership in S_{u,j}: levels 0..j-1, first entry keyed at the width-0 stipulation."""
    for lvl, x in enumerate(xs.entries):
        if x.level != lvl or x.u != xs.u:
            return False
    if xs.entries:
        x0 = xs.entries[0]
        if any(x0.e[j][0] != (x0.f[j], x0.g[j]) for j in range(len(xs.u))):
            return False
    return all(is_successor(ladder, a, b) for a, b in zip(xs.entries, xs.entries[1:]))


# --------------------------------------------------------------------------
# possibilities


@dataclass(frozen=True, eq=True)
class PosFunc:
    """A point h of pos^u_i; pairs are listed in canonical domain-point order."""

    u: Support
    level: int
    pairs: tuple[Pair, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_hash", hash((self.u, self.level, self.pairs)))

    def __hash__(self) -> int:
        return self._hash  # type: ignore[attr-defined]

    @property
    def block(self) -> int:
        return len(self.pairs) // len(self.u) if self.u else 0

    def at(self, alpha: int, g: LevelPerm) -> Pair:
        return self.pairs[self.u.index(alpha) * self.block + perm_rank(g)]

    def row(self, alpha: int) -> tuple[Pair, ...]:
        b = self.block
        j = self.u.index(alpha)
        return self.pairs[j * b:(j + 1) * b]


def domain_points(ladder: ParamLadder, u: Sequence[int], i: int) -> list[tuple[int, LevelPerm]]:
    """D^u_i in canonical order: alpha ascending, then g by rank."""
    keys = all_perms(_key_width(ladder, i))
    return [(alpha, g) for alpha in make_support(u) for g in keys]


def _pair_choices(ladder: ParamLadder, i: int, g: LevelPerm) -> list[Pair]:
    perms = compatible_perms(g, ladder.width(i))
    return [(a, b) for a in perms for b in perms]


def pos_count(ladder: ParamLadder, u: Sequence[int], i: int) -> int:
    """|pos^u_i| = (bec_i^2)^{|D^u_i|}, with a single point at level 0 or for empty u."""
    if not 0 <= i < ladder.levels:
        raise ValueError(f"level {i} out of range")
    u = make_support(u)
    if not u or i == 0:
        return 1
    d = ladder.n[i] - ladder.n[i - 1]
    bec = math.factorial(2**d) ** (2 ** ladder.n[i - 1])
    return (bec * bec) ** (len(u) * math.factorial(2 ** ladder.n[i - 1]))


def pos_enumerate(ladder: ParamLadder, u: Sequence[int], i: int) -> list[PosFunc]:
    """Every h in pos^u_i, in canonical order. Refuses when the count exceeds enum_cap."""
    return list(iter_pos(ladder, u, i))


def iter_pos(ladder: ParamLadder, u: Sequence[int], i: int) -> Iterator[PosFunc]:
    u = make_support(u)
    ladder.check_cap(pos_count(ladder, u, i), f"pos^{list(u)}_{i}")
    choices = [_pair_choices(ladder, i, g) for _, g in domain_points(ladder, u, i)]
    for combo in itertools.product(*choices):
        yield PosFunc(u, i, combo)


def pos_index(ladder: ParamLadder, h: PosFunc) -> int:
    """Position of h in the canonical enumeration (mixed radix, first point most significant)."""
    return _pos_index(ladder, h)


@lru_cache(maxsize=1 << 18)
def _pos_index(ladder: ParamLadder, h: PosFunc) -> int:
    idx = 0
    for (alpha, g), pair in zip(domain_points(ladder, h.u, h.level), h.pairs):
        choices = _pair_choices(ladder, h.level, g)
        idx = idx * len(choices) + choices.index(pair)
    return idx


def restrict_pos(h: PosFunc, w: Sequence[int]) -> PosFunc:
    """h restricted to D^w_i. An empty w yields the unique point of pos^emptyset_i."""
    w = make_support(w)
    if w == h.u:
        return h
    return _restrict_pos(h, w)


@lru_cache(maxsize=1 << 18)
def _restrict_pos(h: PosFunc, w: Support) -> PosFunc:
    b = h.block
    pairs = []
    for j in _indices(h.u, w):
        pairs.extend(h.pairs[j * b:(j + 1) * b])
    return PosFunc(w, h.level, tuple(pairs))


def join_pos(h1: PosFunc, h2: PosFunc) -> PosFunc:
    """The union h1 cup h2 on u1 cup u2; they must agree on the common support."""
    if h1.level != h2.level:
        raise ValueError("level mismatch")
    u = make_support(h1.u + h2.u)
    rows = []
    for alpha in u:
        r1 = h1.row(alpha) if alpha in h1.u else None
        r2 = h2.row(alpha) if alpha in h2.u else None
        if r1 is not None and r2 is not None and r1 != r2:
            raise ValueError(f"functions disagree at {alpha}")
        rows.extend(r1 if r1 is not None else r2)
    return PosFunc(u, h1.level, tuple(rows))


def validate_pos(ladder: ParamLadder, h: PosFunc) -> None:
    """Raise unless every pair satisfies the restriction constraint."""
    for (alpha, g), (a, b) in zip(domain_points(ladder, h.u, h.level), h.pairs):
        allowed = compatible_perms(g, ladder.width(h.level))
        if a not in allowed or b not in allowed:
            raise ValueError(f"h({alpha}, {g.images}) violates the restriction constraint")


# --------------------------------------------------------------------------
# successors and restriction


def succ_apply(ladder: ParamLadder, xs: HistorySeq, h: PosFunc, *, check: bool = False) -> HistorySeq:
    """suc_x(h) = x followed by y, (f_y, g_y) = h(alpha, g_{x_{i-1}}(alpha)), e_y(alpha)(pi) = h(alpha, pi)."""
    i = len(xs)
    if h.level != i or h.u != xs.u:
        raise ValueError("h must lie in pos^u_i for i = length of the history")
    if check:
        validate_pos(ladder, h)
    b = h.block
    fs, gs, es = [], [], []
    for j, alpha in enumerate(xs.u):
        row = h.pairs[j * b:(j + 1) * b]
        fa, ga = row[perm_rank(xs.last_g(alpha))]
        fs.append(fa)
        gs.append(ga)
        es.append(row)
    y = CreatureObject(i, xs.u, tuple(fs), tuple(gs), tuple(es))
    return HistorySeq(xs.u, xs.entries + (y,))


def witness_of(xs: HistorySeq, j: int) -> PosFunc:
    """The unique h with x|(j+1) = suc_{x|j}(h), read off the e-table of x_j."""
    return _witness(xs.entries[j])


@lru_cache(maxsize=1 << 18)
def _witness(y: CreatureObject) -> PosFunc:
    return PosFunc(y.u, y.level, tuple(p for row in y.e for p in row))


def histories(ladder: ParamLadder, u: Sequence[int], j: int) -> list[HistorySeq]:
    """All of S_{u,j} in canonical order (lexicographic in the witnesses)."""
    u = make_support(u)
    total = 1
    for i in range(j):
        total *= pos_count(ladder, u, i)
    ladder.check_cap(total, f"S_{{{list(u)},{j}}}")
    layer = [empty_history(u)]
    for i in range(j):
        space = pos_enumerate(ladder, u, i)
        layer = [succ_apply(ladder, xs, h) for xs in layer for h in space]
    return layer


def restrict_obj(x: CreatureObject, w: Sequence[int]) -> CreatureObject:
    w = make_support(w)
    if w == x.u:
        return x
    return _restrict_obj(x, w)


@lru_cache(maxsize=1 << 18)
def _restrict_obj(x: CreatureObject, w: Support) -> CreatureObject:
    idx = _indices(x.u, w)
    return CreatureObject(
        x.level, w,
        tuple(x.f[j] for j in idx), tuple(x.g[j] for j in idx), tuple(x.e[j] for j in idx),
    )


def restrict_history(xs: HistorySeq, w: Sequence[int]) -> HistorySeq:
    """x restricted to w entrywise. An empty w gives the single core-free history of that length."""
    w = make_support(w)
    if w == xs.u:
        return xs
    return HistorySeq(w, tuple(restrict_obj(x, w) for x in xs.entries))


# --------------------------------------------------------------------------
# trees and cones


def tree_less(ladder: ParamLadder, xs: HistorySeq, alpha: int, eta: tuple[int, int], nu: tuple[int, int]) -> bool:
    """eta < nu in t_{x,alpha}; nodes are (level, value) with value in ^{n_level}2."""
    (i, a), (j, b) = eta, nu
    if alpha not in xs.u:
        raise ValueError(f"{alpha} not in support")
    if not (i < j < len(xs)):
        return False
    shift = ladder.width(j) - ladder.width(i)
    return xs[j].f_at(alpha)(b) >> shift == xs[i].f_at(alpha)(a)


@dataclass(frozen=True)
class LeveledTree:
    widths: tuple[int, ...]
    less: frozenset[tuple[tuple[int, int], tuple[int, int]]]

    def nodes(self) -> list[tuple[int, int]]:
        return [(i, v) for i, w in enumerate(self.widths) for v in range(1 << w)]


def tree_of(ladder: ParamLadder, xs: HistorySeq, alpha: int) -> LeveledTree:
    widths = tuple(ladder.width(i) for i in range(len(xs)))
    nodes = [(i, v) for i, w in enumerate(widths) for v in range(1 << w)]
    rel = frozenset(
        (a, b) for a in nodes for b in nodes if tree_less(ladder, xs, alpha, a, b)
    )
    return LeveledTree(widths, rel)


def g_inv_f(x: CreatureObject, alpha: int, eta: int) -> int:
    """(g_x(alpha)^{-1} o f_x(alpha))(eta)."""
    target = x.f_at(alpha)(eta)
    return x.g_at(alpha).images.index(target)


def cone_of(ladder: ParamLadder, xs: HistorySeq, alpha: int, i: int, eta: int) -> set[tuple[int, int]]:
    """All nodes strictly above (i, eta) in t_{x,alpha}, within the length of x."""
    out = set()
    base = xs[i].f_at(alpha)(eta)
    for j in range(i + 1, len(xs)):
        shift = ladder.width(j) - ladder.width(i)
        fj = xs[j].f_at(alpha)
        out.update((j, v) for v in range(1 << ladder.width(j)) if fj(v) >> shift == base)
    return out


def cone_disjointness(
    ladder: ParamLadder, xs: HistorySeq, alpha1: int, alpha2: int, i: int, eta1: int, eta2: int
) -> tuple[bool, bool]:
    """(premise, disjoint) for the criterion: differing g^{-1}f images force disjoint cones."""
    if alpha1 == alpha2:
        raise ValueError("alpha1 and alpha2 must differ")
    if not 0 <= i < len(xs):
        raise ValueError("level out of range")
    x = xs[i]
    premise = g_inv_f(x, alpha1, eta1) != g_inv_f(x, alpha2, eta2)
    disjoint = not (cone_of(ladder, xs, alpha1, i, eta1) & cone_of(ladder, xs, alpha2, i, eta2))
    return premise, disjoint


# --------------------------------------------------------------------------
# e-tables


def extract_e(xs: HistorySeq) -> list[tuple[tuple[Pair, ...], ...]]:
    return [x.e for x in xs.entries]


def history_from_e(ladder: ParamLadder, e_seq: Sequence[Sequence[Sequence[Pair]]], u: Sequence[int]) -> HistorySeq:
    """Rebuild x from its e-tables, starting at the width-0 stipulation for g_{x_{-1}}."""
    u = make_support(u)
    entries: list[CreatureObject] = []
    prev = [LevelPerm.identity(0)] * len(u)
    for i, table in enumerate(e_seq):
        if len(table) != len(u):
            raise ValueError("e-table must have one row per member of u")
        fs, gs = [], []
        for j in range(len(u)):
            r = perm_rank(prev[j])
            if r >= len(table[j]):
                raise ValueError(f"e-table at level {i} is missing key rank {r}")
            fa, ga = table[j][r]
            fs.append(fa)
            gs.append(ga)
        entries.append(CreatureObject(i, u, tuple(fs), tuple(gs), tuple(tuple(row) for row in table)))
        prev = gs
    return HistorySeq(u, tuple(entries))


def kappa_of(xs: HistorySeq, alpha: int) -> tuple[LevelPerm, ...]:
    """<f_{x_j}(alpha) : j < length>."""
    return tuple(x.f_at(alpha) for x in xs.entries)
