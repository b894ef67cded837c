"""Parameter ladders, bit-strings and permutations of level sets.

A string in ^n 2 is stored as an integer read big-endian, so restricting to
the first m bits is a right shift:

>>> restrict_string(BitString(3, 0b011), 2)
BitString(width=2, value=1)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

__all__ = [
    "BitString",
    "LevelPerm",
    "ParamLadder",
    "Symbolic",
    "all_perms",
    "beth",
    "block_extension_count",
    "compatible_perms",
    "fiber_extension",
    "perm_compose",
    "perm_inverse",
    "perm_rank",
    "perm_unrank",
    "restrict_string",
]

DEFAULT_ENUM_CAP = 2**24


class CapExceeded(RuntimeError):
    """An exhaustive enumeration would materialize more than enum_cap items."""


# --------------------------------------------------------------------------
# beth


@dataclass(frozen=True)
class Symbolic:
    """Stand-in for a number too large to materialize."""

    text: str

    def __str__(self) -> str:
        return self.text


_BETH_LIMIT = 5


def beth(j: int) -> int | Symbolic:
    """Iterated exponential: beth(0) = 1, beth(j+1) = 2**beth(j).

    beth(5) already has 19729 digits; larger indices return a Symbolic marker.
    """
    if j < 0:
        raise ValueError("beth index must be non-negative")
    if j > _BETH_LIMIT:
        return Symbolic(f"beth({j})")
    value = 1
    for _ in range(j):
        value = 2**value
    return value


# --------------------------------------------------------------------------
# bit-strings


@dataclass(frozen=True, order=True)
class BitString:
    width: int
    value: int

    def __post_init__(self) -> None:
        if self.width < 0 or not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value {self.value} does not fit width {self.width}")

    def bits(self) -> str:
        return format(self.value, f"0{self.width}b") if self.width else ""


def restrict_string(rho: BitString, m: int) -> BitString:
    """Initial segment of length m (the m most significant bits)."""
    if not 0 <= m <= rho.width:
        raise ValueError(f"cannot restrict width {rho.width} to {m}")
    return BitString(m, rho.value >> (rho.width - m))


# --------------------------------------------------------------------------
# permutations


@dataclass(frozen=True, order=True)
class LevelPerm:
    """A permutation of ^width 2 given by its image array."""

    width: int
    images: tuple[int, ...] = field(repr=True)

    def __post_init__(self) -> None:
        size = 1 << self.width
        if len(self.images) != size or sorted(self.images) != list(range(size)):
            raise ValueError("images must list a bijection of [0, 2**width)")

    @classmethod
    def identity(cls, width: int) -> LevelPerm:
        return cls(width, tuple(range(1 << width)))

    def __call__(self, value: int) -> int:
        return self.images[value]

    def apply(self, rho: BitString) -> BitString:
        if rho.width != self.width:
            raise ValueError("width mismatch")
        return BitString(self.width, self.images[rho.value])

    def compose(self, other: LevelPerm) -> LevelPerm:
        """self after other."""
        return perm_compose(self, other)

    def inverse(self) -> LevelPerm:
        return perm_inverse(self)

    def rank(self) -> int:
        return perm_rank(self)


def perm_compose(p: LevelPerm, q: LevelPerm) -> LevelPerm:
    """(p o q)(x) = p(q(x))."""
    if p.width != q.width:
        raise ValueError("width mismatch")
    return LevelPerm(p.width, tuple(p.images[x] for x in q.images))


def perm_inverse(p: LevelPerm) -> LevelPerm:
    inv = [0] * len(p.images)
    for x, y in enumerate(p.images):
        inv[y] = x
    return LevelPerm(p.width, tuple(inv))


@lru_cache(maxsize=1 << 16)
def perm_rank(p: LevelPerm) -> int:
    """Lexicographic rank via the Lehmer code."""
    n = len(p.images)
    rank = 0
    remaining = list(range(n))
    for pos, y in enumerate(p.images):
        idx = remaining.index(y)
        rank += idx * math.factorial(n - 1 - pos)
        remaining.pop(idx)
    return rank


def perm_unrank(width: int, rank: int) -> LevelPerm:
    n = 1 << width
    if not 0 <= rank < math.factorial(n):
        raise ValueError("rank out of range")
    remaining = list(range(n))
    images = []
    for pos in range(n):
        idx, rank = divmod(rank, math.factorial(n - 1 - pos))
        images.append(remaining.pop(idx))
    return LevelPerm(width, tuple(images))


@lru_cache(maxsize=None)
def all_perms(width: int) -> tuple[LevelPerm, ...]:
    """Every permutation of ^width 2, in rank order."""
    if width > 3:
        raise CapExceeded(f"Per(^{width} 2) has (2^{width})! elements")
    return tuple(
        LevelPerm(width, images)
        for images in itertools.permutations(range(1 << width))
    )


@lru_cache(maxsize=None)
def compatible_perms(g: LevelPerm, width: int) -> tuple[LevelPerm, ...]:
    """All pi of the given width with pi(rho) restricted to g.width = g(rho restricted).

    Listed in rank order. Each block of strings sharing a g.width-prefix p is
    sent onto the block of prefix g(p), via an arbitrary bijection of the low bits.
    """
    d = width - g.width
    if d < 0:
        raise ValueError("target width below g width")
    low = 1 << d
    blocks = list(itertools.permutations(range(low)))
    out = []
    for choice in itertools.product(blocks, repeat=1 << g.width):
        images = [0] * (1 << width)
        for prefix, sigma in enumerate(choice):
            base = g.images[prefix] << d
            for r in range(low):
                images[(prefix << d) | r] = base | sigma[r]
        out.append(LevelPerm(width, tuple(images)))
    out.sort(key=lambda p: p.images)
    return tuple(out)


def fiber_extension(g: LevelPerm, width: int) -> LevelPerm:
    """The compatible extension of g acting as the identity within fibers."""
    d = width - g.width
    low = 1 << d
    images = [(g.images[v >> d] << d) | (v & (low - 1)) for v in range(1 << width)]
    return LevelPerm(width, tuple(images))


# --------------------------------------------------------------------------
# ladders


@dataclass(frozen=True)
class ParamLadder:
    """Widths n_i and norm constants k_i, l_i for levels 0..levels-1."""

    n: tuple[int, ...]
    k: tuple[int, ...]
    l: tuple[int, ...]
    enum_cap: int = DEFAULT_ENUM_CAP

    def __post_init__(self) -> None:
        object.__setattr__(self, "n", tuple(self.n))
        object.__setattr__(self, "k", tuple(self.k))
        object.__setattr__(self, "l", tuple(self.l))
        if not self.n or self.n[0] != 0:
            raise ValueError("n_0 must be 0")
        if any(a >= b for a, b in zip(self.n, self.n[1:])):
            raise ValueError("n must be strictly increasing")
        if len(self.k) != len(self.n) or len(self.l) != len(self.n):
            raise ValueError("n, k, l must have equal length")
        if any(v < 2 for v in self.k) or any(v < 2 for v in self.l):
            raise ValueError("k_i and l_i must be at least 2")
        if self.enum_cap < 1:
            raise ValueError("enum_cap must be positive")

    @classmethod
    def from_widths(cls, n, k=3, l=2, enum_cap: int = DEFAULT_ENUM_CAP) -> ParamLadder:
        n = tuple(n)
        ks = tuple(k) if isinstance(k, (tuple, list)) else (k,) * len(n)
        ls = tuple(l) if isinstance(l, (tuple, list)) else (l,) * len(n)
        return cls(n, ks, ls, enum_cap)

    @classmethod
    def parse(cls, text: str, enum_cap: int | None = None) -> ParamLadder:
        """Parse 'n=0,1,2;k=3,3,3;l=2,2,2'. Omitted k defaults to 3, l to 2."""
        parts: dict[str, tuple[int, ...]] = {}
        for chunk in text.replace(" ", "").split(";"):
            if not chunk:
                continue
            key, _, vals = chunk.partition("=")
            if key not in ("n", "k", "l"):
                raise ValueError(f"unknown ladder key {key!r}")
            parts[key] = tuple(int(v) for v in vals.split(",") if v)
        if "n" not in parts:
            raise ValueError("ladder needs n=...")
        n = parts["n"]
        k = parts.get("k", (3,) * len(n))
        l = parts.get("l", (2,) * len(n))
        if len(k) == 1:
            k = k * len(n)
        if len(l) == 1:
            l = l * len(n)
        return cls(n, k, l, enum_cap if enum_cap is not None else DEFAULT_ENUM_CAP)

    @property
    def levels(self) -> int:
        return len(self.n)

    @property
    def paper_scale(self) -> bool:
        # level 0 has width 0 and never qualifies, so it is exempt
        for ni, ki in zip(self.n[1:], self.k[1:]):
            if ki < 3:
                return False
            # k^(3^k) < 2^n; use logs away from the boundary, ints near it
            approx = 3**ki * math.log2(ki)
            if approx > ni + 1:
                return False
            if approx > ni - 1 and ki ** (3**ki) >= 2**ni:
                return False
        return True

    def width(self, i: int) -> int:
        """n_i, with the convention that level -1 has width 0."""
        return 0 if i < 0 else self.n[i]

    def spec(self) -> str:
        j = lambda xs: ",".join(map(str, xs))  # noqa: E731
        return f"n={j(self.n)};k={j(self.k)};l={j(self.l)}"

    def check_cap(self, size: int, what: str) -> None:
        if size > self.enum_cap:
            raise CapExceeded(f"{what}: {size} items exceeds enum_cap {self.enum_cap}")


def block_extension_count(ladder: ParamLadder, i: int) -> int:
    """Number of pi in Per(^{n_i} 2) compatible with one fixed g in Per(^{n_{i-1}} 2)."""
    if not 1 <= i < ladder.levels:
        raise ValueError(f"level {i} out of range 1..{ladder.levels - 1}")
    d = ladder.n[i] - ladder.n[i - 1]
    return math.factorial(2**d) ** (2 ** ladder.n[i - 1])
