"""Pairing, coding of level sets into N, the orders <_kappa and the sets A_kappa.

Branches here are finite: a branch is the list of its nodes, one value in
^{n_j}2 per level j, and the cone and intersection checkers only look as
far as the data goes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .params import LevelPerm, ParamLadder

__all__ = [
    "KappaSeq",
    "a_kappa",
    "bounded_intersection",
    "cd",
    "code_F",
    "coded_less",
    "cones_disjoint",
    "decode_F",
    "is_branch",
    "is_delta_system",
    "kappa_less",
    "level_interval",
    "op_map",
    "pr",
]


def pr(n: int, m: int) -> int:
    """Cantor pairing (n+m)(n+m+1)/2 + n, a bijection N x N -> N."""
    if n < 0 or m < 0:
        raise ValueError("pr takes naturals")
    s = n + m
    return s * (s + 1) // 2 + n


def cd(h: Mapping[int, int]) -> set[int]:
    """{pr(n, h(n)) : n in dom h} for a finite partial function h."""
    return {pr(n, v) for n, v in h.items()}


def level_interval(ladder: ParamLadder, i: int) -> range:
    """Codes of the strings at level i: a block of 2^{n_i} consecutive naturals."""
    start = sum(1 << ladder.n[j] for j in range(i))
    return range(start, start + (1 << ladder.n[i]))


def code_F(ladder: ParamLadder, level: int, value: int) -> int:
    if not 0 <= level < ladder.levels or not 0 <= value < (1 << ladder.n[level]):
        raise ValueError("string outside the ladder")
    return level_interval(ladder, level).start + value


def decode_F(ladder: ParamLadder, code: int) -> tuple[int, int]:
    """Inverse of code_F, as (level, value)."""
    if code < 0:
        raise ValueError("negative code")
    for i in range(ladder.levels):
        r = level_interval(ladder, i)
        if code in r:
            return i, code - r.start
    raise ValueError(f"code {code} beyond the coded range")


@dataclass(frozen=True)
class KappaSeq:
    """kappa = <pi_l : l < length> with pi_l a permutation of ^{n_l}2; a member of T_length."""

    ladder: ParamLadder
    perms: tuple[LevelPerm, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "perms", tuple(self.perms))
        if len(self.perms) > self.ladder.levels:
            raise ValueError("kappa longer than the ladder")
        for j, p in enumerate(self.perms):
            if p.width != self.ladder.n[j]:
                raise ValueError(f"pi_{j} has width {p.width}, expected {self.ladder.n[j]}")

    def __len__(self) -> int:
        return len(self.perms)

    def nodes(self) -> list[tuple[int, int]]:
        return [(j, v) for j in range(len(self)) for v in range(1 << self.ladder.n[j])]


def kappa_less(kappa: KappaSeq, eta: tuple[int, int], nu: tuple[int, int]) -> bool:
    """eta <_kappa nu: lower level and pi_i(eta) an initial segment of pi_j(nu)."""
    (i, a), (j, b) = eta, nu
    if not (0 <= i < len(kappa) and 0 <= j < len(kappa)):
        raise ValueError("node level outside kappa")
    if i >= j:
        return False
    n = kappa.ladder.n
    return kappa.perms[j](b) >> (n[j] - n[i]) == kappa.perms[i](a)


def coded_less(kappa: KappaSeq) -> set[tuple[int, int]]:
    """<*_kappa as a set of pairs of codes."""
    lad = kappa.ladder
    return {
        (code_F(lad, *x), code_F(lad, *y))
        for x, y in itertools.product(kappa.nodes(), repeat=2)
        if kappa_less(kappa, x, y)
    }


def a_kappa(kappa: KappaSeq, bound: int) -> list[int]:
    """Sorted A_kappa restricted to pairs of codes below the bound."""
    return sorted(pr(a, b) for a, b in coded_less(kappa) if a < bound and b < bound)


def is_branch(kappa: KappaSeq, branch: Sequence[int]) -> bool:
    """Consecutive nodes of the branch are <_kappa-related."""
    return all(
        kappa_less(kappa, (j, branch[j]), (j + 1, branch[j + 1])) for j in range(len(branch) - 1)
    )


def _cone(kappa: KappaSeq, level: int, value: int, top: int) -> set[tuple[int, int]]:
    return {
        (j, v)
        for j in range(level + 1, top)
        for v in range(1 << kappa.ladder.n[j])
        if kappa_less(kappa, (level, value), (j, v))
    }


def cones_disjoint(
    branch1: Sequence[int], kappa1: KappaSeq, branch2: Sequence[int], kappa2: KappaSeq
) -> int | None:
    """Least level n whose upward cones (inside the data) are non-empty and disjoint."""
    if len(branch1) != len(branch2):
        raise ValueError("ragged branch data")
    top = min(len(branch1), len(kappa1), len(kappa2))
    for n in range(top - 1):
        c1 = _cone(kappa1, n, branch1[n], top)
        c2 = _cone(kappa2, n, branch2[n], top)
        if c1 and c2 and not (c1 & c2):
            return n
    return None


def bounded_intersection(
    branch1: Sequence[int], branch2: Sequence[int], sealed_top: bool = False
) -> int | None:
    """Least a (-1 allowed) with the branches disjoint above level a, non-vacuously.

    Agreement at the last level only counts as a witness when `sealed_top`
    says the cones above that node are disjoint in the two trees.
    """
    if len(branch1) != len(branch2):
        raise ValueError("ragged branch data")
    top = len(branch1)
    a = top - 1
    while a >= 0 and branch1[a] != branch2[a]:
        a -= 1
    if a == top - 1 and not sealed_top:
        return None
    return a


# --------------------------------------------------------------------------
# order-preserving maps


def op_map(u: Iterable[int], v: Iterable[int]) -> dict[int, int]:
    """OP_{v,u}: the order-preserving bijection from u onto v."""
    su, sv = sorted(set(u)), sorted(set(v))
    if len(su) != len(sv):
        raise ValueError("op_map needs sets of equal size")
    return dict(zip(su, sv))


def is_delta_system(u: Iterable[int], v: Iterable[int]) -> bool:
    """Equal order type and OP_{v,u} fixes u cap v pointwise."""
    su, sv = set(u), set(v)
    if len(su) != len(sv):
        return False
    m = op_map(su, sv)
    return all(m[a] == a for a in su & sv)
