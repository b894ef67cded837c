"""Weighted possibility functions, the three norms, and the bigness/halving toolkit.

Weights are exact Fractions. The norms are reported as floats, but every
comparison a lemma depends on goes through an exact rational test:

* nor0(F) = 0 exactly when |pos| >= ||F|| * k^(3^k - 1);
* otherwise nor0(F) = k - log_3(log_k(k |pos| / ||F||)).
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .params import ParamLadder
from .possibility import (
    PosFunc,
    Support,
    iter_pos,
    join_pos,
    make_support,
    pos_count,
    restrict_pos,
)

__all__ = [
    "Creature",
    "Nor0",
    "WeightedPos",
    "balanced_product_bound",
    "bigness_select",
    "characteristic",
    "densify",
    "extend_restriction",
    "halve",
    "is_balanced",
    "is_strongly_balanced",
    "mass",
    "nor0",
    "nor0_at_density",
    "nor0_of_ratio",
    "nor1",
    "nor2",
    "nor_drop_leq",
    "pad_to_strong",
    "product",
    "restrict_weighted",
    "round_dyadic",
    "set_of",
    "sigma_member",
    "unhalve",
]

FLAVORS = ("wpos", "vpos", "ypos", "xpos")
HALVE_GRID = 2**32
ZERO = Fraction(0)
ONE = Fraction(1)


class WeightedPos:
    """F: pos^u_i -> [0,1], stored sparsely (absent points weigh 0)."""

    __slots__ = ("ladder", "u", "level", "weights", "flavor", "_restricted")

    def __init__(
        self,
        ladder: ParamLadder,
        u: Sequence[int],
        level: int,
        weights: Mapping[PosFunc, Fraction],
        flavor: str | None = None,
    ) -> None:
        self.ladder = ladder
        self.u: Support = make_support(u)
        self.level = level
        clean = {}
        u_, den, dyadic = self.u, 1 << ladder.width(level), True
        for h, v in weights.items():
            if type(v) is not Fraction:
                v = Fraction(v)
            num, vden = v.numerator, v.denominator
            if num < 0 or num > vden:
                raise ValueError(f"weight {v} outside [0,1]")
            if h.u != u_ or h.level != level:
                raise ValueError("weight key outside pos^u_i")
            if num:
                clean[h] = v
                if den % vden:
                    dyadic = False
        self.weights: dict[PosFunc, Fraction] = clean
        if flavor is None:
            flavor = ("vpos" if dyadic else "wpos") if clean else "xpos"
        if flavor not in FLAVORS:
            raise ValueError(f"unknown flavor {flavor}")
        if flavor in ("wpos", "vpos") and not clean:
            raise ValueError(f"{flavor} functions may not be constantly zero")
        if flavor in ("vpos", "xpos") and not dyadic:
            raise ValueError(f"{flavor} weights must be multiples of 2^-n_i")
        self.flavor = flavor
        self._restricted: dict[Support, WeightedPos] = {}

    def __call__(self, h: PosFunc) -> Fraction:
        return self.weights.get(h, ZERO)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedPos):
            return NotImplemented
        return (self.u, self.level, self.weights) == (other.u, other.level, other.weights)

    def __repr__(self) -> str:
        return f"WeightedPos(u={self.u}, level={self.level}, support={len(self.weights)}, mass={mass(self)})"

    @property
    def pos_size(self) -> int:
        return pos_count(self.ladder, self.u, self.level)

    def is_zero(self) -> bool:
        return not self.weights

    def leq(self, other: WeightedPos) -> bool:
        """Pointwise F <= G."""
        return all(v <= other(h) for h, v in self.weights.items())

    def scaled(self, c: Fraction) -> WeightedPos:
        return WeightedPos(self.ladder, self.u, self.level, {h: v * c for h, v in self.weights.items()}, None)

    def masked(self, keep: Callable[[PosFunc], bool]) -> WeightedPos:
        return WeightedPos(
            self.ladder, self.u, self.level, {h: v for h, v in self.weights.items() if keep(h)}, "ypos"
        )


def as_flavor(F: WeightedPos, flavor: str) -> WeightedPos:
    return WeightedPos(F.ladder, F.u, F.level, F.weights, flavor)


def weighted(ladder: ParamLadder, u, level: int, weights: Mapping[PosFunc, Fraction]) -> WeightedPos:
    """A WeightedPos whose flavor is inferred (ypos when constantly zero)."""
    flavor = None if weights and any(weights.values()) else "ypos"
    return WeightedPos(ladder, u, level, weights, flavor)


def characteristic(
    ladder: ParamLadder, u, level: int, subset: Iterable[PosFunc] | None = None
) -> WeightedPos:
    """Characteristic function of a set of possibilities (all of pos^u_i by default)."""
    points = iter_pos(ladder, u, level) if subset is None else subset
    return weighted(ladder, u, level, {h: ONE for h in points})


# --------------------------------------------------------------------------
# mass and norms


def mass(F: WeightedPos) -> Fraction:
    return sum(F.weights.values(), ZERO)


def set_of(F: WeightedPos) -> set[PosFunc]:
    return set(F.weights)


def density(F: WeightedPos) -> Fraction:
    return mass(F) / F.pos_size


def _log2q(q: Fraction) -> float:
    return math.log2(q.numerator) - math.log2(q.denominator)


def _geq_power(q: Fraction, base: int, exp: int) -> bool:
    """q >= base**exp, decided exactly without building huge powers when avoidable."""
    if q <= 0:
        return False
    approx = exp * math.log2(base)
    lq = _log2q(q)
    if approx > lq + 2:
        return False
    if approx < lq - 2:
        return True
    return q >= Fraction(base) ** exp


@dataclass(frozen=True)
class Nor0:
    exact_zero: bool
    value: float
    raw: float  # formula value before clamping at zero

    def __float__(self) -> float:
        return self.value


def nor_ratio(F: WeightedPos) -> Fraction:
    """k |pos| / ||F||, the quantity whose iterated logarithm defines nor0."""
    m = mass(F)
    if m == 0:
        raise ValueError("norm of a constantly zero function")
    return F.ladder.k[F.level] * F.pos_size / m


def nor0_of_ratio(k: int, x: Fraction) -> Nor0:
    """nor0 as a function of k and x = k |pos| / ||F|| alone."""
    x = Fraction(x)
    if x < k:
        raise ValueError("x = k/density is at least k")
    exact_zero = _geq_power(x / k, k, 3**k - 1)
    lk = _log2q(x) / math.log2(k)
    raw = k - math.log(lk, 3) if lk > 0 else math.inf
    return Nor0(exact_zero, 0.0 if exact_zero else raw, raw)


def nor0_at_density(k: int, d: Fraction) -> Nor0:
    return nor0_of_ratio(k, k / Fraction(d))


def nor0(F: WeightedPos) -> Nor0:
    return nor0_of_ratio(F.ladder.k[F.level], nor_ratio(F))


def nor_drop_leq(F_new: WeightedPos, F: WeightedPos, delta: int) -> bool:
    """Exact truth of nor0(F_new) >= nor0(F) - delta.

    With x = k|pos|/||F|| (computed on each function's own support), the
    unclamped formula obeys phi(F_new) >= phi(F) - delta iff x_new <= x^(3^delta),
    and the clamp max(0, .) adds the escape phi(F) <= delta, i.e. x >= k^(3^(k-delta)).
    """
    if F_new.level != F.level:
        raise ValueError("level mismatch")
    if delta < 0:
        raise ValueError("delta must be non-negative")
    k = F.ladder.k[F.level]
    x = nor_ratio(F)
    if delta >= k or nor0(F).exact_zero:
        return True
    if _geq_power(x, k, 3 ** (k - delta)):
        return True
    x_new = nor_ratio(F_new)
    e = 3**delta
    # x_new <= x^e; compare logs first, exact powers only near equality
    a, b = _log2q(x_new), e * _log2q(x)
    if a > b + 1e-6 * max(1.0, b):
        return False
    if a < b - 1e-6 * max(1.0, b):
        return True
    return x_new <= x**e


# --------------------------------------------------------------------------
# creatures


@dataclass(frozen=True)
class Creature:
    """c = (F, m) with nor0(F) >= m."""

    F: WeightedPos
    m: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "m", Fraction(self.m))
        if self.m < 0:
            raise ValueError("m must be non-negative")

    @property
    def level(self) -> int:
        return self.F.level

    @property
    def u(self) -> Support:
        return self.F.u

    def in_cr(self, tol: float = 1e-9) -> bool:
        """Membership in the underline family (nor0 >= m); dyadic F gives CR proper."""
        return nor0(self.F).value >= float(self.m) - tol

    def is_dyadic(self) -> bool:
        return self.F.flavor in ("vpos", "xpos")


def nor1(c: Creature) -> float:
    return nor0(c.F).value - float(c.m)


def nor2(c: Creature) -> float:
    """log_l(nor1) when that is defined and non-negative, else 0."""
    v = nor1(c)
    if v < 1:
        return 0.0
    return math.log(v) / math.log(c.F.ladder.l[c.level])


def round_dyadic(F: WeightedPos) -> WeightedPos:
    """[F](h) = floor(F(h) 2^{n_i}) / 2^{n_i}."""
    den = 1 << F.ladder.width(F.level)
    w = {h: Fraction(math.floor(v * den), den) for h, v in F.weights.items()}
    w = {h: v for h, v in w.items() if v}
    return WeightedPos(F.ladder, F.u, F.level, w, "vpos" if w else "xpos")


def densify(c: Creature) -> Creature:
    """([F_c], m_c); needs nor1(c) > 1."""
    if not nor1(c) > 1:
        raise ValueError("densify needs nor1 > 1")
    F = round_dyadic(c.F)
    if F.is_zero():
        raise ValueError("rounding annihilated the creature")
    return Creature(F, c.m)


def sigma_member(d: Creature, c: Creature) -> bool:
    """d in Sigma(c): F_d <= F_c and m_d >= m_c (same support and level)."""
    return d.u == c.u and d.level == c.level and d.m >= c.m and d.F.leq(c.F)


def bigness_select(c: Creature, parts: Sequence[WeightedPos]) -> int:
    """Index of a part of maximal mass (lowest index on ties)."""
    if not parts:
        raise ValueError("empty partition")
    total: dict[PosFunc, Fraction] = defaultdict(Fraction)
    for p in parts:
        for h, v in p.weights.items():
            total[h] += v
    if {h: v for h, v in total.items() if v} != c.F.weights:
        raise ValueError("parts do not sum to F_c")
    masses = [mass(p) for p in parts]
    best = max(masses)
    return masses.index(best)


def _grid_up(x: float) -> Fraction:
    return Fraction(math.ceil(Fraction(x) * HALVE_GRID), HALVE_GRID)


def _grid_down(x: float) -> Fraction:
    return Fraction(math.floor(Fraction(x) * HALVE_GRID), HALVE_GRID)


def halve(c: Creature) -> Creature:
    """(F_c, (nor0(F_c) + m_c) / 2), m rounded up to the 2^-32 grid.

    When rounding up would push m past nor0 (only possible if nor1 < 2^-31),
    m is rounded down instead so the result stays a creature.
    """
    n0 = nor0(c.F).value
    mid = (n0 + float(c.m)) / 2
    m = _grid_up(mid)
    if float(m) > n0:
        m = max(c.m, _grid_down(mid))
    return Creature(c.F, m)


def unhalve(d_prime: Creature, c: Creature) -> Creature:
    """(F_{d'}, m_c)."""
    return Creature(d_prime.F, c.m)


# --------------------------------------------------------------------------
# restriction, extension, products


def _fiber_size(F: WeightedPos, w: Support) -> int:
    rest = tuple(a for a in F.u if a not in w)
    return pos_count(F.ladder, rest, F.level)


def restrict_weighted(F: WeightedPos, w: Sequence[int]) -> WeightedPos:
    """(F restricted to w)(h) = sum of F(e) over e extending h, divided by |pos^{u minus w}_i|."""
    w = make_support(w)
    if not w:
        raise ValueError("restriction to the empty support is not defined")
    if not set(w) <= set(F.u):
        raise ValueError(f"{w} is not a subset of {F.u}")
    if w == F.u:
        return F
    # weights are never mutated after construction, so the result is cached
    hit = F._restricted.get(w)
    if hit is not None:
        return hit
    acc: dict[PosFunc, Fraction] = defaultdict(Fraction)
    for h, v in F.weights.items():
        acc[restrict_pos(h, w)] += v
    size = _fiber_size(F, w)
    out = F._restricted[w] = weighted(F.ladder, w, F.level, {h: v / size for h, v in acc.items()})
    return out


def extend_restriction(F1: WeightedPos, F2: WeightedPos) -> WeightedPos:
    """F3 <= F1 on u1 with F3 restricted to u0 equal to F2, for F2 <= F1 restricted to u0."""
    u0 = F2.u
    if not set(u0) < set(F1.u):
        raise ValueError("F2 must live on a proper subset of F1's support")
    F0 = restrict_weighted(F1, u0)
    if not F2.leq(F0):
        raise ValueError("F2 is not dominated by the restriction of F1")
    w = {}
    for e, v in F1.weights.items():
        h = restrict_pos(e, u0)
        den = F0(h)
        if den:
            w[e] = v * F2(h) / den
    return weighted(F1.ladder, F1.u, F1.level, w)


def _core(F1: WeightedPos, F2: WeightedPos) -> Support:
    return tuple(a for a in F1.u if a in F2.u)


def product(F1: WeightedPos, F2: WeightedPos) -> WeightedPos:
    """(F1 * F2)(h) = F1(h|u1) F2(h|u2) on pos^{u1 cup u2}_i; may be constantly zero."""
    if F1.level != F2.level:
        raise ValueError("level mismatch")
    core = _core(F1, F2)
    groups: dict[PosFunc, list[tuple[PosFunc, Fraction]]] = defaultdict(list)
    for h2, v2 in F2.weights.items():
        groups[restrict_pos(h2, core)].append((h2, v2))
    w = {}
    for h1, v1 in F1.weights.items():
        for h2, v2 in groups.get(restrict_pos(h1, core), ()):
            w[join_pos(h1, h2)] = v1 * v2
    u = make_support(F1.u + F2.u)
    return WeightedPos(F1.ladder, u, F1.level, w, "ypos")


def product_mass(F1: WeightedPos, F2: WeightedPos) -> Fraction:
    """||F1 * F2|| without materializing the product."""
    core = _core(F1, F2)
    acc: dict[PosFunc, Fraction] = defaultdict(Fraction)
    for h2, v2 in F2.weights.items():
        acc[restrict_pos(h2, core)] += v2
    return sum((v1 * acc.get(restrict_pos(h1, core), ZERO) for h1, v1 in F1.weights.items()), ZERO)


def is_balanced(F1: WeightedPos, F2: WeightedPos) -> bool:
    if F1.level != F2.level:
        raise ValueError("level mismatch")
    if F1.is_zero() or F2.is_zero():
        return False
    if density(F1) != density(F2):
        return False
    core = _core(F1, F2)
    if core:
        return restrict_weighted(F1, core) == restrict_weighted(F2, core)
    return True


def is_strongly_balanced(F1: WeightedPos, F2: WeightedPos) -> bool:
    d1 = len(set(F1.u) - set(F2.u))
    d2 = len(set(F2.u) - set(F1.u))
    return d1 == d2 != 0 and is_balanced(F1, F2)


def cylinder(F: WeightedPos, v: Sequence[int]) -> WeightedPos:
    """Lift F on u to v containing u by F'(h) = F(h|u)."""
    v = make_support(v)
    extra = tuple(a for a in v if a not in F.u)
    if not set(F.u) <= set(v):
        raise ValueError("target support must contain the source support")
    if not extra:
        return F
    pad = list(iter_pos(F.ladder, extra, F.level))
    w = {join_pos(h, e): val for h, val in F.weights.items() for e in pad}
    return WeightedPos(F.ladder, v, F.level, w, F.flavor)


def pad_to_strong(F1: WeightedPos, F2: WeightedPos) -> tuple[WeightedPos, WeightedPos]:
    """Enlarge supports with fresh ordinals until |u1 - u2| = |u2 - u1| > 0."""
    if not is_balanced(F1, F2):
        raise ValueError("pad_to_strong needs a balanced pair")
    d1 = len(set(F1.u) - set(F2.u))
    d2 = len(set(F2.u) - set(F1.u))
    target = max(d1, d2, 1)
    fresh = max(F1.u + F2.u) + 1
    new1 = list(F1.u)
    new2 = list(F2.u)
    for _ in range(target - d1):
        new1.append(fresh)
        fresh += 1
    for _ in range(target - d2):
        new2.append(fresh)
        fresh += 1
    return cylinder(F1, new1), cylinder(F2, new2)


@dataclass(frozen=True)
class ProductBound:
    a: Fraction
    lhs: Fraction
    rhs: Fraction
    verdict: bool


def balanced_product_bound(F1: WeightedPos, F2: WeightedPos, a: Fraction | None = None) -> ProductBound:
    """Density of F1 * F2 against a^3 / 8, a defaulting to the common density."""
    if not is_balanced(F1, F2):
        raise ValueError("balanced_product_bound needs a balanced pair")
    d = density(F1)
    a = d if a is None else Fraction(a)
    if not 0 < a <= d:
        raise ValueError("a must satisfy 0 < a <= common density")
    u = make_support(F1.u + F2.u)
    lhs = product_mass(F1, F2) / pos_count(F1.ladder, u, F1.level)
    rhs = a**3 / 8
    return ProductBound(a, lhs, rhs, lhs >= rhs)
