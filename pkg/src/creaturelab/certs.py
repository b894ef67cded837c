"""Canonical, hash-stable serialization for certificates and dumps.

Everything goes through plain JSON with sorted keys and no whitespace, so
equal data gives byte-identical text. Rationals are written "num/den".
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any

from .params import LevelPerm, ParamLadder, perm_rank
from .possibility import HistorySeq, PosFunc

FORMAT_VERSION = "creaturelab/1"

__all__ = [
    "FORMAT_VERSION",
    "canonical_json",
    "content_hash",
    "frac",
    "history_data",
    "history_key",
    "ladder_data",
    "pos_data",
    "weighted_data",
    "write_atomic",
]


def frac(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_frac(text: str) -> Fraction:
    num, _, den = text.partition("/")
    return Fraction(int(num), int(den or 1))


def _default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return frac(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    if hasattr(obj, "to_data"):
        return obj.to_data()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(data: Any, indent: int | None = None) -> str:
    seps = (",", ":") if indent is None else (",", ": ")
    return json.dumps(data, sort_keys=True, separators=seps, default=_default, indent=indent)


def content_hash(data: Any) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()


def write_atomic(path: str | os.PathLike, text: str) -> Path:
    """Write via a temp file in the same directory and rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# --------------------------------------------------------------------------
# domain objects


def ladder_data(ladder: ParamLadder) -> dict:
    return {"n": list(ladder.n), "k": list(ladder.k), "l": list(ladder.l)}


def perm_data(p: LevelPerm) -> list[int]:
    return [p.width, perm_rank(p)]


def pos_data(h: PosFunc) -> dict:
    """Pairs as permutation ranks; the widths are implied by the level."""
    return {
        "u": list(h.u),
        "level": h.level,
        "pairs": [[perm_rank(a), perm_rank(b)] for a, b in h.pairs],
    }


def history_key(xs: HistorySeq) -> tuple:
    """Support-free canonical key: the e-tables as permutation ranks."""
    return tuple(
        tuple(tuple((perm_rank(a), perm_rank(b)) for a, b in row) for row in x.e)
        for x in xs.entries
    )


def history_data(xs: HistorySeq) -> dict:
    return {"u": list(xs.u), "e": [[[list(p) for p in row] for row in lvl] for lvl in history_key(xs)]}


def weighted_data(F) -> dict:
    items = sorted(
        ([[list(p) for p in pos_data(h)["pairs"]], frac(v)] for h, v in F.weights.items()),
        key=lambda item: item[0],
    )
    return {"u": list(F.u), "level": F.level, "flavor": F.flavor, "weights": items}


def creature_data(c) -> dict:
    return {"F": weighted_data(c.F), "m": frac(c.m)}


def condition_data(p) -> dict:
    return {
        "ladder": ladder_data(p.ladder),
        "u": list(p.u),
        "history": history_data(p.xs),
        "creatures": [creature_data(c) for c in p.creatures],
        "horizon": p.horizon,
    }
