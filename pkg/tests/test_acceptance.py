"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Every test runs the packaged lemma suite and, where cheap, an independent
brute-force or closed-form cross-check, then enforces the wall-clock limit.
"""

import itertools
import json
import math
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from creaturelab.cli import main
from creaturelab.coding import bounded_intersection
from creaturelab.disjoint import threshold_fires
from creaturelab.norms import (
    Creature,
    characteristic,
    halve,
    mass,
    nor0,
    nor0_at_density,
    nor1,
    nor_drop_leq,
    unhalve,
    weighted,
)
from creaturelab.params import ParamLadder
from creaturelab.possibility import pos_enumerate
from creaturelab.suites import RunConfig, run_suite

SEED = 0


@pytest.fixture
def criterion(capsys):
    @contextmanager
    def run(number: int, title: str, limit: float):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            in_time = elapsed < limit
            verdict = "PASS" if ok and in_time else "FAIL"
            with capsys.disabled():
                print(f"\ncriterion {number:>2} {verdict}: {title} ({elapsed:.1f}s, limit {limit:.0f}s)")
        assert in_time, f"criterion {number} took {elapsed:.1f}s, limit {limit}s"

    return run


def suite_ok(ident: str, **kw):
    res = run_suite(ident, RunConfig(seed=SEED, **kw))
    failed = {k: (c.checked, c.failures) for k, c in res.clauses.items() if c.asserted and not c.passed}
    assert res.passed, f"{ident} failed clauses {failed}"
    return res


def float_nor0(k: int, d: Fraction) -> float:
    inner = math.log(k / float(d), k)
    return k - math.log(inner, 3) if inner > 0 else float(k)


def test_criterion_01_norms(criterion):
    with criterion(1, "norm axioms", 10):
        res = suite_ok("2q.23")
        assert res.clauses["monotone_value"].checked <= 10**4
        for spec in ("n=0,1;k=3,3", "n=0,1,2;k=3,3,3"):
            lad = ParamLadder.parse(spec)
            for i in range(lad.levels):
                assert nor0(characteristic(lad, (0,), i)).value == lad.k[i]
        # exact zero against the float formula
        for k in (2, 3):
            for e in range(0, 3**k + 3):
                d = Fraction(1, k**e)
                v = nor0_at_density(k, d)
                assert v.exact_zero == (float_nor0(k, d) <= 1e-9)


def test_criterion_02_bigness_halving(criterion):
    with criterion(2, "bigness and halving", 10):
        suite_ok("2q.23")
        lad = ParamLadder.parse("n=0,1")
        pts = pos_enumerate(lad, (0,), 1)
        assert len(pts) == 4
        for r in range(1, 5):
            for S in itertools.combinations(pts, r):
                F = characteristic(lad, (0,), 1, S)
                for mask in range(1 << r):
                    A = [h for t, h in enumerate(S) if mask >> t & 1]
                    B = [h for h in S if h not in A]
                    parts = [weighted(lad, (0,), 1, {h: Fraction(1) for h in X}) for X in (A, B)]
                    best = max(parts, key=mass)
                    assert nor_drop_leq(best, F, 1)
                c = Creature(F, 0)
                h = halve(c)
                assert h.F == c.F and unhalve(h, c) == c
                assert nor1(h) >= nor1(c) / 2 - 1e-9


def test_criterion_03_restriction(criterion):
    with criterion(3, "restriction and extension", 30):
        res = suite_ok("3.10A")
        assert res.clauses["roundtrip"].checked == 2**16 - 1
        assert res.clauses["density_preserved"].checked == 2**16 - 1


def test_criterion_04_balanced_products(criterion):
    with criterion(4, "balanced products", 30):
        res = suite_ok("x38")
        pairs = res.data["balanced_pairs"]
        # balanced 0/1 pairs on disjoint 4-point spaces: equal sizes, both non-empty
        assert len(pairs) == sum(math.comb(4, k) ** 2 for k in range(1, 5))
        for m1, m2, lhs in pairs:
            k1, k2 = bin(m1).count("1"), bin(m2).count("1")
            a = Fraction(k1, 4)
            assert Fraction(lhs) == Fraction(k1 * k2, 16) >= a**3 / 8
        assert res.clauses["bound"].failures == 0


def test_criterion_05_projections(criterion):
    with criterion(5, "projections and complete_lift", 120):
        res = suite_ok("2q.45")
        for name in ("monotone", "surjective", "lift_extends_q", "lift_projection_extends_r"):
            assert res.clauses[name].checked > 0


def test_criterion_06_amalgamation(criterion):
    with criterion(6, "Delta-system amalgamation", 120):
        res = suite_ok("2q.52")
        assert res.clauses["dominates"].checked > 0
        assert res.clauses["nor1_drop_leq_1"].failures == 0


def test_criterion_07_step(criterion):
    with criterion(7, "disjointification step", 300):
        res = suite_ok("3c.30")
        for name in "abcde":
            assert res.clauses[name].failures == 0
        assert res.clauses["d_exact"].checked > 0
        assert res.clauses["alpha_no_agreement"].checked > 0
        assert res.clauses["beta_factors"].checked > 0


def test_criterion_08_level_loop(criterion):
    with criterion(8, "level loop", 300):
        res = suite_ok("3c.26")
        assert res.data["instances"] >= 100
        assert max(res.data["k_star"]) <= 64
        for name in ("alpha", "beta", "gamma", "delta", "mass_8_kstar"):
            assert res.clauses[name].checked >= 100


def test_criterion_09_obstruction(criterion):
    with criterion(9, "counting obstruction", 60):
        res = suite_ok("2q.29")
        assert Fraction(res.data["max_fraction"]) == Fraction(1, 2)
        for k in (2, 3, 4):
            for d in range(0, 70):
                fires = threshold_fires(k, d)
                assert fires == (2**d >= k ** (3**k - 1))
                assert nor0_at_density(k, Fraction(1, 2**d)).exact_zero == fires


def test_criterion_10_corollary_and_branch_amalgamation(criterion):
    with criterion(10, "creature corollary and branch amalgamation", 600):
        cor = suite_ok("cruccor")
        for name in ("alpha", "gamma", "gamma_enumerated"):
            assert cor.clauses[name].checked > 0
        br = suite_ok("3c.34")
        assert br.clauses["forced_disjointness"].checked > 0


def test_criterion_11_cone_criterion(criterion):
    with criterion(11, "cone criterion, exhaustive", 120):
        res = suite_ok("2q.3")
        assert res.data["histories"] == 4**2 * 256**2
        assert res.clauses["premise_implies_disjoint"].failures == 0


def test_criterion_12_pipeline(criterion, tmp_path):
    plan = {
        "ladder": "n=0,1,2",
        "depth": 2,
        "horizon": 3,
        "splits": [0, 0],
        "oracles": [{"level": 1, "id": "lift", "params": {"to": 2, "width": 2}}],
        "names": [{"level": 0, "m": 1, "k": 0, "seed": 7}],
        "base": {"i": 2, "size": 16, "seed": 1},
    }
    with criterion(12, "fuse, extract, code, bounded intersection, replay", 300):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        plan_path = tmp_path / "plan.json"
        plan_path.write_text(json.dumps(plan))
        for out in (out1, out2):
            assert main(["fuse", str(plan_path), "--out", str(out)]) == 0
            assert main(["code", str(out / "fusion-tree.json"), "--out", str(out)]) == 0
        assert main(["fuse", "--replay", str(out1 / "fusion-tree.json"), "--out", str(out1)]) == 0
        for name in ("fusion-tree.json", "code.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        conds1 = sorted(p.name for p in (out1 / "conditions").iterdir())
        assert conds1 == sorted(p.name for p in (out2 / "conditions").iterdir())
        code = json.loads((out1 / "code.json").read_text())
        assert code["passed"] and code["witnesses"]
        horizon = plan["horizon"]
        for w in code["witnesses"]:
            b0, b1 = w["branches"]
            sealed = w["kind"] == "cones"
            assert bounded_intersection(b0, b1, sealed_top=sealed) == w["witness"]
            assert w["witness"] is not None and w["witness"] <= horizon
