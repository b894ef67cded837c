"""Batch front-end: ladders, enumeration, verification suites, constructions, exports.

Every command writes its certificate or dump atomically under --out and
prints a one-line summary. Exit status: 0 when every asserted clause passed,
1 on a failed clause or a rejected input, 2 on usage errors, 3 when a cap
or the wall-clock guard stops a run.
"""

from __future__ import annotations

import argparse
import json
import random
import signal
import sys
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .certs import (
    FORMAT_VERSION,
    canonical_json,
    condition_data,
    content_hash,
    frac,
    history_data,
    pos_data,
    weighted_data,
    write_atomic,
)
from .coding import KappaSeq, a_kappa, op_map
from .conditions import amalgamate, transfer
from .disjoint import BranchLabeling, disjointify_level, verify_level
from .fusion import FusionPlan, build_fusion, extract_branch, sibling_witnesses, tree_strings
from .norms import nor0_at_density
from .params import DEFAULT_ENUM_CAP, CapExceeded, ParamLadder, perm_rank
from .possibility import histories, pos_count, pos_enumerate
from .suites import SUITES, RunConfig, run_suite, sample_function, seeded_condition

DEFAULT_TIME_LIMIT = 600


class GuardTimeout(RuntimeError):
    pass


@contextmanager
def _wall_clock(seconds: int | None):
    if not seconds or not hasattr(signal, "SIGALRM"):
        yield
        return

    def fire(signum, frame):
        raise GuardTimeout(f"wall-clock guard of {seconds}s exceeded")

    old = signal.signal(signal.SIGALRM, fire)
    signal.alarm(seconds)
    try:
        yield
    finally:
        signal.alarm(0)
        signal.signal(signal.SIGALRM, old)


def _emit(args, name: str, data: dict) -> Path:
    data = {"format": FORMAT_VERSION, **data}
    return write_atomic(Path(args.out) / name, canonical_json(data, indent=2) + "\n")


def _ladder(args, default: str) -> ParamLadder:
    return ParamLadder.parse(args.ladder or default, args.cap)


def _support(text: str) -> tuple[int, ...]:
    return tuple(int(a) for a in text.split(",") if a != "")


def _config(args) -> RunConfig:
    return RunConfig(args.ladder, args.seed, args.cap, args.horizon, args.depth, getattr(args, "instances", None))


# --------------------------------------------------------------------------
# commands


def cmd_params(args) -> int:
    lad = _ladder(args, "n=0,1,2")
    levels = []
    for i in range(lad.levels):
        levels.append({
            "i": i, "n": lad.n[i], "k": lad.k[i], "l": lad.l[i],
            "pos_size_u1": pos_count(lad, (0,), i), "pos_size_u2": pos_count(lad, (0, 1), i),
        })
    data = {"ladder": lad.spec(), "paper_scale": lad.paper_scale, "enum_cap": lad.enum_cap, "levels": levels}
    path = _emit(args, "params.json", data)
    print(f"params {lad.spec()} paper_scale={lad.paper_scale} -> {path}")
    return 0


def cmd_enumerate(args) -> int:
    lad = _ladder(args, "n=0,1")
    u = _support(args.support)
    if args.space == "pos":
        count = pos_count(lad, u, args.level)
        listing = [pos_data(h)["pairs"] for h in pos_enumerate(lad, u, args.level)] if args.list else None
    else:
        items = histories(lad, u, args.level)
        count = len(items)
        listing = None
        if args.list:
            listing = [history_data(xs)["e"] for xs in items]
    data = {"ladder": lad.spec(), "space": args.space, "support": list(u), "level": args.level, "count": count}
    if listing is not None:
        data["listing"] = listing
    path = _emit(args, f"enumerate-{args.space}.json", data)
    print(f"{args.space} u={list(u)} level={args.level}: {count} -> {path}")
    return 0


def cmd_norm(args) -> int:
    lad = _ladder(args, "n=0,1,2")
    if not 0 <= args.level < lad.levels:
        raise ValueError(f"level {args.level} outside the ladder")
    d = Fraction(args.density)
    if not 0 < d <= 1:
        raise ValueError("density must lie in (0, 1]")
    k = lad.k[args.level]
    v = nor0_at_density(k, d)
    data = {"ladder": lad.spec(), "level": args.level, "k": k, "density": frac(d),
            "exact_zero": v.exact_zero, "value": repr(v.value)}
    path = _emit(args, "norm.json", data)
    print(f"nor0 at density {frac(d)}, k={k}: exact_zero={v.exact_zero} value={v.value:.9f} -> {path}")
    return 0


def cmd_verify(args) -> int:
    ids = list(SUITES) if args.suite == "all" else list(args.ids or [])
    if args.suite and args.suite != "all":
        ids.append(args.suite)
    if not ids:
        print("verify: give a lemma id or --suite all", file=sys.stderr)
        return 2
    unknown = [i for i in ids if i not in SUITES]
    if unknown:
        print(f"verify: unknown lemma id {unknown[0]!r}; known: {', '.join(SUITES)}", file=sys.stderr)
        return 2
    status = 0
    for ident in ids:
        with _wall_clock(args.time_limit):
            res = run_suite(ident, _config(args))
        path = write_atomic(Path(args.out) / f"verify-{ident}.json", canonical_json(res.to_data(), indent=2) + "\n")
        failed = [k for k, c in res.clauses.items() if c.asserted and not c.passed]
        print(f"{ident}: {'pass' if res.passed else 'FAIL ' + ','.join(failed)} -> {path}")
        status = status or (0 if res.passed else 1)
    return status


def cmd_amalgamate(args) -> int:
    lad = _ladder(args, "n=0,1,2")
    H = args.horizon or lad.levels
    rng = random.Random(f"{args.seed}|amalgamate")
    u1, u2 = (0, 2), (1, 2)
    p1 = seeded_condition(lad, u1, max(1, H - 1), H, rng, args.size)
    p2 = transfer(p1, op_map(u1, u2))
    rep = amalgamate(p1, p2)
    data = {
        "ladder": lad.spec(), "seed": args.seed,
        "inputs": [content_hash(condition_data(p1)), content_hash(condition_data(p2))],
        "output": content_hash(condition_data(rep.q)),
        "dominates": list(rep.dominates),
        "nor1_drop_leq_1": rep.norm_drop_ok,
        "passed": rep.passed,
    }
    path = _emit(args, "amalgamate.json", data)
    print(f"amalgamate: {'pass' if rep.passed else 'FAIL'} -> {path}")
    return 0 if rep.passed else 1


def cmd_disjointify(args) -> int:
    lad = _ladder(args, "n=0,1,2")
    rng = random.Random(f"{args.seed}|disjointify")
    i = lad.levels - 1
    F1 = sample_function(lad, (0,), i, args.size, rng)
    F2 = type(F1)(lad, (1,), i, {type(h)((1,), i, h.pairs): v for h, v in F1.weights.items()})
    H1 = BranchLabeling.seeded(lad, (0,), i, args.seed, "H1")
    H2 = BranchLabeling.seeded(lad, (1,), i, args.seed, "H2")
    res = disjointify_level(F1, F2, H1, H2)
    v = verify_level(res, F1, F2, H1, H2)
    clauses = {k: bool(v[k]) for k in ("alpha", "beta", "gamma", "delta")}
    data = {
        "ladder": lad.spec(), "seed": args.seed, "level": i,
        "inputs": [content_hash(weighted_data(F1)), content_hash(weighted_data(F2))],
        "result": res.to_data(),
        "clauses": clauses,
        "reported": {"h_consistent": bool(v["h_consistent"]), "patterns": v["patterns"]},
        "density": frac(v["density"]), "density_bound": frac(v["density_bound"]),
        "passed": all(clauses.values()),
    }
    path = _emit(args, "disjointify.json", data)
    print(f"disjointify: k*={res.k_star} {'pass' if data['passed'] else 'FAIL'} -> {path}")
    return 0 if data["passed"] else 1


def _plan(args) -> FusionPlan:
    if args.plan:
        data = json.loads(Path(args.plan).read_text())
        if args.depth is not None:
            data["depth"] = args.depth
            data["splits"] = data.get("splits", [])[: args.depth] or [0] * args.depth
    else:
        lad = _ladder(args, "n=0,1,2")
        depth = 1 if args.depth is None else args.depth
        data = {
            "ladder": lad.spec(), "depth": depth, "horizon": args.horizon or lad.levels,
            "splits": [0] * depth, "oracles": [], "names": [],
            "base": {"i": lad.levels - 1, "size": 16, "seed": args.seed},
        }
    return FusionPlan.from_data(data, args.cap)


def _tree_outputs(args, tree) -> dict:
    """The dump plus one file per level condition, referenced by hash."""
    for p in tree.levels:
        d = condition_data(p)
        write_atomic(Path(args.out) / "conditions" / f"{content_hash(d)}.json", canonical_json(d, indent=2) + "\n")
    return tree.to_data()


def cmd_fuse(args) -> int:
    if args.replay:
        dump = json.loads(Path(args.replay).read_text())
        plan = FusionPlan.from_data(dump["plan"], args.cap)
        tree = build_fusion(plan)
        again = canonical_json(tree.to_data(), indent=2) + "\n"
        same = again == Path(args.replay).read_text()
        print(f"replay: {'identical' if same else 'DIFFERS'}")
        return 0 if same else 1
    plan = _plan(args)
    with _wall_clock(args.time_limit):
        tree = build_fusion(plan)
    data = _tree_outputs(args, tree)
    path = write_atomic(Path(args.out) / "fusion-tree.json", canonical_json(data, indent=2) + "\n")
    print(f"fuse: depth {plan.depth}, {len(data['nodes'])} nodes, {'pass' if tree.passed else 'FAIL'} -> {path}")
    return 0 if tree.passed else 1


def cmd_code(args) -> int:
    dump_text = Path(args.tree).read_text()
    dump = json.loads(dump_text)
    plan = FusionPlan.from_data(dump["plan"], args.cap)
    tree = build_fusion(plan)
    if canonical_json(tree.to_data(), indent=2) + "\n" != dump_text:
        raise ValueError("the tree dump does not replay from its plan")
    leaves = []
    for m, eta in enumerate(tree_strings(plan.splits)[-1]):
        br = extract_branch(tree, m)
        kap: KappaSeq = br.kappas[m]
        leaves.append({
            "leaf": m, "eta": eta, "length": len(kap),
            "kappa": [perm_rank(p) for p in kap.perms],
            "A_kappa": a_kappa(kap, args.bound),
        })
    witnesses = sibling_witnesses(tree)
    ok = all(w["witness"] is not None for w in witnesses)
    data = {"tree": content_hash(dump), "bound": args.bound, "leaves": leaves,
            "witnesses": witnesses, "passed": ok}
    path = _emit(args, "code.json", data)
    print(f"code: {len(leaves)} leaves, {len(witnesses)} sibling checks, {'pass' if ok else 'FAIL'} -> {path}")
    return 0 if ok else 1


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--ladder", help="ladder spec, e.g. 'n=0,1,2;k=3,3,3'")
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for every randomized choice")
    common.add_argument("--cap", type=int, default=DEFAULT_ENUM_CAP, help="enumeration cap")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--horizon", type=int, help="finite horizon H")
    common.add_argument("--depth", type=int, help="fusion depth")
    common.add_argument("--time-limit", type=int, default=DEFAULT_TIME_LIMIT, help="wall-clock guard in seconds")

    p = argparse.ArgumentParser(prog="creaturelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("params", parents=[common], help="validate a ladder and report sizes").set_defaults(fn=cmd_params)

    e = sub.add_parser("enumerate", parents=[common], help="count or list pos^u_i or S_{u,i}")
    e.add_argument("--space", choices=["pos", "histories"], default="pos")
    e.add_argument("--support", default="0")
    e.add_argument("--level", type=int, default=1)
    e.add_argument("--list", action="store_true")
    e.set_defaults(fn=cmd_enumerate)

    n = sub.add_parser("norm", parents=[common], help="nor0 at a given density")
    n.add_argument("--level", type=int, default=1)
    n.add_argument("--density", default="1")
    n.set_defaults(fn=cmd_norm)

    v = sub.add_parser("verify", parents=[common], help="run lemma suites")
    v.add_argument("ids", nargs="*", metavar="ID", help=f"one of {', '.join(SUITES)}")
    v.add_argument("--suite", help="a lemma id, or 'all'")
    v.add_argument("--instances", type=int, help="override the number of seeded instances")
    v.set_defaults(fn=cmd_verify)

    a = sub.add_parser("amalgamate", parents=[common], help="seeded Delta-system amalgamation")
    a.add_argument("--size", type=int, default=8)
    a.set_defaults(fn=cmd_amalgamate)

    d = sub.add_parser("disjointify", parents=[common], help="seeded level-loop run")
    d.add_argument("--size", type=int, default=16)
    d.set_defaults(fn=cmd_disjointify)

    f = sub.add_parser("fuse", parents=[common], help="build a fusion tree from a plan file")
    f.add_argument("plan", nargs="?", help="plan file (JSON); a trivial plan when omitted")
    f.add_argument("--replay", metavar="DUMP", help="rebuild a tree dump and compare bytes")
    f.set_defaults(fn=cmd_fuse)

    c = sub.add_parser("code", parents=[common], help="A_kappa dumps for the leaves of a tree")
    c.add_argument("tree", help="tree dump written by fuse")
    c.add_argument("--bound", type=int, default=7)
    c.set_defaults(fn=cmd_code)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CapExceeded, GuardTimeout) as exc:
        print(f"{args.command}: stopped: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, LookupError, OSError) as exc:
        print(f"{args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
