"""Verification suites, one per lemma id, shared by the CLI and the tests.

Each suite sweeps an exhaustive or seeded family at a desk-scale ladder and
records, per clause, how many instances were checked and how many failed.
Clauses marked reported-only are listed in the certificate but never affect
the verdict; they cover guarantees that need paper-scale parameters.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

from .certs import FORMAT_VERSION, canonical_json, frac, pos_data
from .coding import op_map
from .conditions import (
    Condition,
    amalgamate,
    complete_lift,
    cylinder_condition,
    leq,
    lift,
    pos_of,
    project_condition,
    transfer,
)
from .disjoint import (
    BranchLabeling,
    NamePair,
    amalgamate_disjoint,
    coincidence_fraction,
    coincidence_fraction_part2,
    coincides_part2,
    disjointify_creatures,
    disjointify_level,
    disjointify_step,
    nor_zero_obstruction,
    threshold_fires,
    verify_level,
    verify_step,
)
from .norms import (
    Creature,
    WeightedPos,
    balanced_product_bound,
    bigness_select,
    characteristic,
    densify,
    extend_restriction,
    halve,
    is_balanced,
    is_strongly_balanced,
    mass,
    nor0,
    nor0_at_density,
    nor1,
    nor_drop_leq,
    product,
    restrict_weighted,
    round_dyadic,
    sigma_member,
    unhalve,
    weighted,
)
from .params import DEFAULT_ENUM_CAP, ParamLadder
from .possibility import (
    HistorySeq,
    PosFunc,
    cone_of,
    g_inv_f,
    histories,
    iter_pos,
    pos_count,
    pos_enumerate,
    restrict_history,
    restrict_pos,
    succ_apply,
)

__all__ = ["Clause", "RunConfig", "SUITES", "SuiteResult", "run_suite"]


@dataclass(frozen=True)
class RunConfig:
    ladder: str | None = None
    seed: int = 0
    cap: int = DEFAULT_ENUM_CAP
    horizon: int | None = None
    depth: int | None = None
    instances: int | None = None

    def ladders(self, defaults: Sequence[str]) -> list[ParamLadder]:
        specs = [self.ladder] if self.ladder else list(defaults)
        return [ParamLadder.parse(s, self.cap) for s in specs]

    def rng(self, tag: str) -> random.Random:
        return random.Random(f"{self.seed}|{tag}")

    def count(self, default: int) -> int:
        return default if self.instances is None else self.instances


@dataclass
class Clause:
    name: str
    asserted: bool = True
    checked: int = 0
    failures: int = 0
    examples: list = field(default_factory=list)
    note: str = ""

    def record(self, ok: bool, ident: object = None) -> bool:
        self.checked += 1
        if not ok:
            self.failures += 1
            if len(self.examples) < 5:
                self.examples.append(ident)
        return ok

    def tally(self, total: int, bad: int, ident: object = None) -> None:
        """Record total checks at once, bad of them failing under one ident."""
        self.checked += total
        if bad:
            self.failures += bad
            if len(self.examples) < 5:
                self.examples.append(ident)

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_data(self) -> dict:
        out = {
            "asserted": self.asserted,
            "checked": self.checked,
            "failures": self.failures,
            "passed": self.passed,
        }
        if self.examples:
            out["examples"] = self.examples
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class SuiteResult:
    ident: str
    config: RunConfig
    ladders: list[ParamLadder]
    clauses: dict[str, Clause]
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses.values() if c.asserted)

    def clause(self, name: str) -> Clause:
        return self.clauses[name]

    def to_data(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "suite": self.ident,
            "ladders": [lad.spec() for lad in self.ladders],
            "seed": self.config.seed,
            "horizon": self.config.horizon,
            "instances": self.config.instances,
            "clauses": {k: c.to_data() for k, c in self.clauses.items()},
            "data": self.data,
            "passed": self.passed,
        }


def _clauses(*names: str, reported: Sequence[str] = ()) -> dict[str, Clause]:
    out = {n: Clause(n) for n in names}
    for n in reported:
        out[n] = Clause(n, asserted=False)
    return out


def _subset_functions(ladder: ParamLadder, u, level: int) -> Iterator[tuple[int, WeightedPos]]:
    """Every nonzero 0/1-valued function on pos^u_i, by bitmask over the canonical order."""
    pts = pos_enumerate(ladder, u, level)
    for mask in range(1, 1 << len(pts)):
        yield mask, characteristic(ladder, u, level, [h for b, h in enumerate(pts) if mask >> b & 1])


def sample_function(ladder: ParamLadder, u, level: int, size: int, rng: random.Random,
                     weights: Sequence[Fraction] = (Fraction(1),)) -> WeightedPos:
    pts = pos_enumerate(ladder, u, level)
    pick = rng.sample(pts, min(size, len(pts)))
    return weighted(ladder, u, level, {h: rng.choice(weights) for h in pick})


def _hash_rule(seed: int, side: int) -> Callable:
    """A deterministic pseudo-random rule on possibilities."""
    return lambda h: int(hashlib.sha256(f"{seed}|{canonical_json(pos_data(h))}".encode()).hexdigest(), 16) % side


def _ckey(p: Condition) -> tuple:
    return (p.i, p.xs, tuple((frozenset(c.F.weights.items()), c.m) for c in p.creatures))


def _float_norm(F: WeightedPos) -> float:
    """k - log3(log_k(k |pos| / ||F||)) in floating point, without the exact threshold."""
    k = F.ladder.k[F.level]
    x = k * F.pos_size / mass(F)
    lk = (math.log2(x.numerator) - math.log2(x.denominator)) / math.log2(k)
    return k - math.log(lk, 3)


# --------------------------------------------------------------------------
# possibility space: the cone criterion and the tree identities


def _cone_level(lad: ParamLadder, ys: HistorySeq, u, i: int) -> tuple[int, int, int]:
    """(pairs checked, premise count, premise-but-meeting count) at level i."""
    x, side = ys[i], 1 << lad.n[i]
    cones = {a: [cone_of(lad, ys, a, i, e) for e in range(side)] for a in u}
    gi = {a: [g_inv_f(x, a, e) for e in range(side)] for a in u}
    total = prem = bad = 0
    for a1 in u:
        for a2 in u:
            if a1 == a2:
                continue
            for e1 in range(side):
                for e2 in range(side):
                    total += 1
                    if gi[a1][e1] != gi[a2][e2]:
                        prem += 1
                        bad += bool(cones[a1][e1] & cones[a2][e2])
    return total, prem, bad


def _tree_identities(lad: ParamLadder, ys: HistorySeq, u, H: int) -> tuple[int, int, int]:
    """(checks, g-chain failures, f-restriction failures) over the top-level nodes."""
    n, top = lad.n, H - 1
    total = chain_bad = f_bad = 0
    for a in u:
        for rho in range(1 << n[top]):
            vals = [ys[j].g_at(a)(rho >> (n[top] - n[j])) for j in range(H)]
            total += 1
            chain_bad += not all(vals[j + 1] >> (n[j + 1] - n[j]) == vals[j] for j in range(H - 1))
            fv = ys[top].f_at(a)(rho)
            f_bad += not all(fv >> (n[top] - n[j]) == ys[j].g_at(a)(rho >> (n[top] - n[j])) for j in range(top))
    return total, chain_bad, f_bad


def suite_cones(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1,2"])
    H = cfg.horizon or lad.levels
    u = (0, 1)
    cl = _clauses("premise_implies_disjoint", "g_chain", "f_restricts_to_g", reported=["premise_holds"])
    # outcomes depend only on the f, g maps at and above a level, so they are memoized on those
    level_memo: dict[tuple, tuple[int, int, int]] = {}
    tree_memo: dict[tuple, tuple[int, int, int]] = {}
    count = 0
    for head in histories(lad, u, H - 1):
        for h in iter_pos(lad, u, H - 1):
            ys = succ_apply(lad, head, h)
            count += 1
            fg = tuple((x.f, x.g) for x in ys.entries)
            for i in range(H):
                key = (i, fg[i][1]) + tuple(x[0] for x in fg[i:])
                res = level_memo.get(key)
                if res is None:
                    res = level_memo[key] = _cone_level(lad, ys, u, i)
                total, prem, bad = res
                cl["premise_holds"].tally(total, total - prem, count)
                cl["premise_implies_disjoint"].tally(prem, bad, count)
            res = tree_memo.get(fg)
            if res is None:
                res = tree_memo[fg] = _tree_identities(lad, ys, u, H)
            total, chain_bad, f_bad = res
            cl["g_chain"].tally(total, chain_bad, count)
            cl["f_restricts_to_g"].tally(total, f_bad, count)
    cl["premise_holds"].note = "how many (alpha, i, eta1, eta2) satisfy the premise; failures count the rest"
    return SuiteResult("2q.3", cfg, [lad], cl, {
        "histories": count, "support": list(u), "length": H,
        "distinct_level_keys": len(level_memo), "distinct_tree_keys": len(tree_memo),
    })


# --------------------------------------------------------------------------
# norms


def suite_densify(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1"])
    level = lad.levels - 1
    cl = _clauses("idempotent", "below_input", "mass_bound", "flavor", reported=["nor1_drop_leq_1"])
    if lad.paper_scale:
        cl["nor1_drop_leq_1"].asserted = True
    pts = pos_enumerate(lad, (0,), level)
    if len(pts) > 6:
        pts = cfg.rng("densify").sample(pts, 6)
    grid = [Fraction(0), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(1)]
    den = 1 << lad.width(level)
    for idx, ws in enumerate(itertools.product(grid, repeat=len(pts))):
        if not any(ws):
            continue
        F = weighted(lad, (0,), level, dict(zip(pts, ws)))
        R = round_dyadic(F)
        cl["idempotent"].record(round_dyadic(R) == R, idx)
        cl["below_input"].record(R.leq(F), idx)
        cl["mass_bound"].record(mass(R) >= mass(F) - Fraction(len(F.weights), den), idx)
        cl["flavor"].record(R.flavor == ("vpos" if R.weights else "xpos"), idx)
        c = Creature(F, 0)
        if nor1(c) > 1 and R.weights:
            cl["nor1_drop_leq_1"].record(nor1(densify(c)) >= nor1(c) - 1 - 1e-9, idx)
    return SuiteResult("2q.9", cfg, [lad], cl)


def suite_norms(cfg: RunConfig) -> SuiteResult:
    ladders = cfg.ladders(["n=0,1;k=3,3", "n=0,1,2;k=3,3,3"])
    rng = cfg.rng("norms")
    cl = _clauses(
        "nor0_full_is_k", "monotone_mass", "monotone_value", "monotone_zero", "zero_matches_float",
        "bigness", "halve_keeps_F", "unhalve_roundtrip", "unhalve_in_sigma", "halving_bound",
    )
    pairs = 0
    for lad in ladders:
        for i in range(1, lad.levels):
            full = characteristic(lad, (0,), i)
            cl["nor0_full_is_k"].record(nor0(full).value == lad.k[i] and not nor0(full).exact_zero, (lad.spec(), i))
        # dominated pairs: all of {0, 1/2, 1}^pos at level 1, seeded subsets above
        pts = pos_enumerate(lad, (0,), 1)
        grid = [Fraction(0), Fraction(1, 2), Fraction(1)]
        fams = []
        for ws in itertools.product(grid, repeat=len(pts)):
            if any(ws):
                fams.append(weighted(lad, (0,), 1, dict(zip(pts, ws))))
        cand = [(a, b) for a in fams for b in fams if a.leq(b)]
        if len(cand) > 3000:
            cand = rng.sample(cand, 3000)
        if lad.levels > 2:
            for _ in range(1000):
                big = sample_function(lad, (0,), 2, rng.randint(2, 256), rng)
                keep = rng.sample(sorted(big.weights, key=lambda h: h.pairs), rng.randint(1, len(big.weights)))
                cand.append((weighted(lad, (0,), 2, {h: big(h) for h in keep}), big))
        for idx, (F1, F2) in enumerate(cand):
            pairs += 1
            a, b = nor0(F1), nor0(F2)
            cl["monotone_mass"].record(mass(F1) <= mass(F2), idx)
            cl["monotone_value"].record(a.value <= b.value + 1e-9, idx)
            cl["monotone_zero"].record(not b.exact_zero or a.exact_zero, idx)
        # exact_zero against the float formula, on both sides of the threshold
        k = lad.k[1]
        P = pos_count(lad, (0,), 1)
        tests = list(fams)
        exp = (3**k - 1) * math.log(k, 3)
        for j in range(max(0, int(exp) - 4), int(exp) + 6):
            wgt = Fraction(P, 3**j)
            if 0 < wgt <= 1:
                tests.append(weighted(lad, (0,), 1, {pts[0]: wgt}))
        for idx, F in enumerate(tests):
            z = nor0(F).exact_zero
            fv = _float_norm(F)
            cl["zero_matches_float"].record((fv <= 1e-9) if z else (fv > -1e-9), idx)
        # bigness: every 0/1 F on the 4-point space, every 2-part partition
        if lad.width(1) == 1:
            for mask, F in _subset_functions(lad, (0,), 1):
                c = Creature(F, 0)
                if nor1(c) < 1:
                    continue
                keys = sorted(F.weights, key=lambda h: h.pairs)
                for split in range(1 << len(keys)):
                    A = weighted(lad, (0,), 1, {h: F(h) for b, h in enumerate(keys) if split >> b & 1})
                    B = weighted(lad, (0,), 1, {h: F(h) for b, h in enumerate(keys) if not split >> b & 1})
                    part = [A, B][bigness_select(c, [A, B])]
                    cl["bigness"].record(nor_drop_leq(part, F, 1), (mask, split))
        # halving
        for idx in range(500):
            lvl = rng.randint(1, lad.levels - 1)
            F = sample_function(lad, (0,), lvl, rng.randint(1, min(64, pos_count(lad, (0,), lvl))), rng,
                                 [Fraction(1), Fraction(1, 2), Fraction(3, 4)])
            top = nor0(F).value
            c = Creature(F, Fraction(rng.randint(0, 1000), 1000) * Fraction(top).limit_denominator(1000) * Fraction(9, 10))
            if not c.in_cr():
                continue
            d = halve(c)
            cl["halve_keeps_F"].record(d.F == c.F and d.m >= c.m, idx)
            cl["halving_bound"].record(nor1(d) >= nor1(c) / 2 - 1e-9, idx)
            back = unhalve(d, c)
            cl["unhalve_roundtrip"].record(back.F == c.F and back.m == c.m, idx)
            shrunk = Creature(F.scaled(Fraction(1, 2)), d.m)
            if shrunk.in_cr() and nor1(shrunk) >= 1:
                u2 = unhalve(shrunk, c)
                cl["unhalve_in_sigma"].record(sigma_member(u2, c) and u2.F == shrunk.F, idx)
    return SuiteResult("2q.23", cfg, ladders, cl, {"dominated_pairs": pairs})


def suite_restriction(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1"])
    u1, u0 = (0, 1), (0,)
    level = lad.levels - 1
    cl = _clauses("density_preserved", "identity_extension", "roundtrip", "below_F1", "half_mass", "tower")
    P1, P0 = pos_count(lad, u1, level), pos_count(lad, u0, level)
    if P1 > 16:
        raise ValueError("the exhaustive restriction sweep needs |pos^{u1}| <= 16")
    n_inst = 0
    for mask, F1 in _subset_functions(lad, u1, level):
        n_inst += 1
        R = restrict_weighted(F1, u0)
        cl["density_preserved"].record(mass(R) / P0 == mass(F1) / P1, mask)
        if mask % 7 == 1:
            cl["identity_extension"].record(extend_restriction(F1, R) == F1, mask)
        F2 = R.scaled(Fraction(1, 2))
        F3 = extend_restriction(F1, F2)
        cl["roundtrip"].record(restrict_weighted(F3, u0) == F2, mask)
        cl["below_F1"].record(F3.leq(F1), mask)
        cl["half_mass"].record(mass(F3) * 2 == mass(F1), mask)
        if mask % 257 == 0:
            v = (0, 1)
            cl["tower"].record(restrict_weighted(restrict_weighted(F1, v), u0) == R, mask)
    return SuiteResult("3.10A", cfg, [lad], cl, {"instances": n_inst})


def suite_products(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1"])
    level = lad.levels - 1
    cl = _clauses("bound", "delta_copy_strongly_balanced", "disjoint_mass_product")
    fams = list(_subset_functions(lad, (0,), level))
    if len(fams) > 255:
        raise ValueError("the exhaustive product sweep needs |pos^{0}| <= 8")
    checked = []
    for (m1, F1), (m2, G) in itertools.product(fams, repeat=2):
        F2 = WeightedPos(lad, (1,), level, {type(h)((1,), h.level, h.pairs): v for h, v in G.weights.items()})
        if not is_balanced(F1, F2):
            continue
        rep = balanced_product_bound(F1, F2)
        cl["bound"].record(rep.verdict, [m1, m2])
        cl["disjoint_mass_product"].record(mass(product(F1, F2)) == mass(F1) * mass(F2), [m1, m2])
        checked.append([m1, m2, frac(rep.lhs)])
        if m1 == m2:
            cl["delta_copy_strongly_balanced"].record(is_strongly_balanced(F1, F2), m1)
    return SuiteResult("x38", cfg, [lad], cl, {"balanced_pairs": checked})


# --------------------------------------------------------------------------
# conditions


def _conditions_on(lad: ParamLadder, u, H: int) -> list[tuple[tuple, Condition]]:
    """All conditions with 0/1-valued creatures and m = 0 on u, horizon H."""
    out = []
    for i in range(H + 1):
        for xs in histories(lad, u, i):
            fams = [list(_subset_functions(lad, u, j)) for j in range(i, H)]
            for combo in itertools.product(*fams):
                key = (i, xs, tuple(m for m, _ in combo))
                out.append((key, Condition(lad, u, xs, tuple(Creature(F, 0) for _, F in combo), H)))
    return out


def suite_projections(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1"])
    H = cfg.horizon or 2
    v, u = (0, 1), (0,)
    cl = _clauses("monotone", "surjective", "tower", "lift_extends_q", "lift_projection_extends_r",
                  "identity_lift")
    small = _conditions_on(lad, u, H)
    # surjectivity through cylinder lifts
    for key, p in small:
        for xs in histories(lad, v, p.i):
            if restrict_history(xs, u) == p.xs:
                cl["surjective"].record(project_condition(cylinder_condition(p, v, xs), u) == p, key[2])
    big = _conditions_on(lad, v, H)
    proj = [project_condition(q, u) for _, q in big]
    index = {}
    for n, (key, _) in enumerate(big):
        index[key] = n
    # monotonicity: every one-point shrink of the first creature, every lift
    for n, (key, q) in enumerate(big):
        i, xs, masks = key
        if masks:
            m0 = masks[0]
            b = 0
            while m0 >> b:
                if m0 >> b & 1 and m0 != 1 << b:
                    k2 = (i, xs, (m0 & ~(1 << b),) + masks[1:])
                    r = big[index[k2]][1]
                    if leq(q, r):
                        cl["monotone"].record(leq(proj[n], proj[index[k2]]), (n, b))
                b += 1
            for ys in pos_of(q, i + 1):
                ql = lift(q, ys)
                cl["monotone"].record(leq(proj[n], project_condition(ql, u)), (n, "lift"))
        if n % 997 == 0:
            cl["tower"].record(project_condition(project_condition(q, v), u) == proj[n], n)
    # complete_lift over every (q, r) with proj(q) <= r among the small conditions
    above: dict[tuple, list[Condition]] = {}
    for n, (key, q) in enumerate(big):
        pk = _ckey(proj[n])
        if pk not in above:
            above[pk] = [r for _, r in small if r.i >= q.i and leq(proj[n], r)]
        for r in above[pk]:
            q1 = complete_lift(q, u, r)
            cl["lift_extends_q"].record(leq(q, q1), n)
            cl["lift_projection_extends_r"].record(leq(r, project_condition(q1, u)), n)
            if r == proj[n]:
                cl["identity_lift"].record(q1 == q, n)
    return SuiteResult("2q.45", cfg, [lad], cl, {"conditions_v": len(big), "conditions_u": len(small)})


def seeded_condition(lad: ParamLadder, u, i: int, H: int, rng: random.Random, size: int,
                      weights: Sequence[Fraction] = (Fraction(1),)) -> Condition:
    xs = rng.choice(histories(lad, u, i))
    cs = [Creature(sample_function(lad, u, j, size, rng, weights), 0) for j in range(i, H)]
    return Condition(lad, u, xs, tuple(cs), H)


def suite_amalgamation(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1,2;k=3,3,3"])
    H = cfg.horizon or lad.levels
    rng = cfg.rng("amalgamation")
    cl = _clauses("dominates", "nor1_drop_leq_1", "i_preserved", reported=["nor1_drop_values"])
    shapes = [((0,), (1,)), ((0, 2), (1, 2))]
    n = cfg.count(40)
    for idx in range(n):
        u1, u2 = shapes[idx % 2]
        i = rng.randint(1, H - 1)
        p1 = seeded_condition(lad, u1, i, H, rng, rng.choice([4, 8, 16]), [Fraction(1), Fraction(1, 2)])
        p2 = transfer(p1, op_map(u1, u2))
        rep = amalgamate(p1, p2)
        cl["dominates"].record(all(rep.dominates), idx)
        cl["i_preserved"].record(rep.q.i == p1.i, idx)
        for ok in rep.norm_drop_ok:
            if ok is not None:
                cl["nor1_drop_leq_1"].record(ok, idx)
        for d in rep.nor1_drop:
            cl["nor1_drop_values"].record(d <= 1 + 1e-9, idx)
    return SuiteResult("2q.52", cfg, [lad], cl)


# --------------------------------------------------------------------------
# disjointification


def suite_step(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1"])
    level = lad.levels - 1
    cl = _clauses("a", "b", "c", "d", "e", "d_exact", "alpha_no_agreement", "beta_factors")
    modes = {"alpha": 0, "beta": 0}
    fams = list(_subset_functions(lad, (0,), level))
    pts1 = pos_enumerate(lad, (0,), level)
    pts2 = pos_enumerate(lad, (1,), level)
    if len(pts1) > 4:
        raise ValueError("the exhaustive step sweep needs |pos^{0}| <= 4")
    pairs = []
    for (m1, F1), (m2, G) in itertools.product(fams, repeat=2):
        F2 = WeightedPos(lad, (1,), level, {type(h)((1,), h.level, h.pairs): v for h, v in G.weights.items()})
        if is_balanced(F1, F2):
            pairs.append((m1, m2, F1, F2))
    total = 0
    for size in (1, 2):
        labels = tuple(range(size))
        for m1, m2, F1, F2 in pairs:
            for t1 in itertools.product(labels, repeat=len(pts1)):
                H1 = dict(zip(pts1, t1))
                for t2 in itertools.product(labels, repeat=len(pts2)):
                    H2 = dict(zip(pts2, t2))
                    ident = [size, m1, m2, list(t1), list(t2)]
                    total += 1
                    res = disjointify_step(F1, F2, H1, H2, labels)
                    modes[res.mode] += 1
                    for k, ok in verify_step(F1, F2, H1, H2, res).items():
                        cl[k].record(ok, ident)
                    cl["d_exact"].record(8 * mass(res.F1) >= mass(F1) and 8 * mass(res.F2) >= mass(F2), ident)
                    prod = product(res.F1, res.F2)
                    if res.mode == "alpha":
                        cl["alpha_no_agreement"].record(
                            all(H1[restrict_pos(h, (0,))] != H2[restrict_pos(h, (1,))] for h in prod.weights), ident)
                    else:
                        cl["beta_factors"].record(
                            all(H1[restrict_pos(h, (0,))] == H2[restrict_pos(h, (1,))] == res.H_prime[restrict_pos(h, ())]
                                for h in prod.weights), ident)
    # seeded instances with a non-empty core
    rng = cfg.rng("step")
    if lad.levels >= 2:
        for idx in range(cfg.count(20)):
            u1, u2 = (0, 2), (1, 2)
            F1 = sample_function(lad, u1, 1, rng.randint(2, 12), rng, [Fraction(1), Fraction(1, 2)])
            F2 = WeightedPos(lad, u2, 1, {type(h)(u2, 1, h.pairs): v for h, v in F1.weights.items()})
            labels = tuple(range(rng.randint(1, 4)))
            H1 = {h: rng.choice(labels) for h in F1.weights}
            H2 = {h: rng.choice(labels) for h in F2.weights}
            res = disjointify_step(F1, F2, H1, H2, labels)
            modes[res.mode] += 1
            for k, ok in verify_step(F1, F2, H1, H2, res).items():
                cl[k].record(ok, ["seeded", idx])
    return SuiteResult("3c.30", cfg, [lad], cl, {"exhaustive_instances": total, "balanced_pairs": len(pairs), "modes": modes})


def _level_instance(lad: ParamLadder, rng: random.Random, idx: int, core: bool, size: int):
    u1, u2 = ((0, 2), (1, 2)) if core else ((0,), (1,))
    i = lad.levels - 1
    F1 = sample_function(lad, u1, i, size, rng, [Fraction(1), Fraction(1, 2)])
    F2 = WeightedPos(lad, u2, i, {type(h)(u2, i, h.pairs): v for h, v in F1.weights.items()})
    if not core and rng.random() < 0.5:
        F2 = sample_function(lad, u2, i, len(F1.weights), rng)
        F1 = weighted(lad, u1, i, {h: Fraction(1) for h in F1.weights})
    H1 = BranchLabeling.seeded(lad, u1, i, rng.getrandbits(32), f"a{idx}")
    H2 = BranchLabeling.seeded(lad, u2, i, rng.getrandbits(32), f"b{idx}")
    return F1, F2, H1, H2


def suite_level(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1,2"])
    rng = cfg.rng("level")
    cl = _clauses("alpha", "beta", "gamma", "delta", "mass_8_kstar", reported=["h_consistent"])
    kstars = set()
    n = cfg.count(100)
    for idx in range(n):
        core = idx % 5 == 4
        F1, F2, H1, H2 = _level_instance(lad, rng, idx, core, rng.randint(8, 40))
        res = disjointify_level(F1, F2, H1, H2)
        if res.k_star > 64:
            raise ValueError("|S_{u,i}| above 64")
        kstars.add(res.k_star)
        v = verify_level(res, F1, F2, H1, H2)
        for k in ("alpha", "beta", "gamma", "delta", "h_consistent"):
            cl[k].record(bool(v[k]), idx)
        ks = res.k_star
        cl["mass_8_kstar"].record(8**ks * mass(res.F1) >= mass(F1) and 8**ks * mass(res.F2) >= mass(F2), idx)
    return SuiteResult("3c.26", cfg, [lad], cl, {"instances": n, "k_star": sorted(kstars)})


def suite_obstruction(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1,2"])
    i = lad.levels - 1
    u, alpha = (0, 1), 0
    rng = cfg.rng("obstruction")
    cl = _clauses("fraction_within_bound", "fraction_max_equals_bound", "part2_matches_count",
                  "threshold_agrees", "obstruction_consistent")
    side = 1 << lad.width(i)
    bound = Fraction(1, 2 ** (lad.width(i) - lad.width(i - 1)))
    fr_all = []
    for xi, xs in enumerate(histories(lad, u, i)):
        for e1, e2 in itertools.product(range(side), repeat=2):
            rep = coincidence_fraction(lad, i, u, alpha, xs, lambda h, e=e1: e, lambda h, e=e2: e)
            fr_all.extend(rep.fractions)
            cl["fraction_within_bound"].record(rep.within_bound, [xi, e1, e2])
        seed = rng.getrandbits(32)
        rep = coincidence_fraction(lad, i, u, alpha, xs, _hash_rule(seed, side), _hash_rule(seed + 1, side))
        cl["fraction_within_bound"].record(rep.within_bound, [xi, "seeded"])
    cl["fraction_max_equals_bound"].record(max(fr_all) == bound, frac(max(fr_all)))
    # the part-(2) reduction against a direct count
    w = ()
    uu = (0, 1)
    for xi, xs in enumerate(histories(lad, uu, i)[:4]):
        s1, s2 = rng.getrandbits(16), rng.getrandbits(16)
        rule1 = lambda x, yw, s=s1: s % side  # noqa: E731
        rule2 = lambda x, yw, s=s2: s % side  # noqa: E731
        rep = coincidence_fraction_part2(lad, i, uu, w, 0, 1, xs, rule1, rule2)
        rest = (1,)
        direct = []
        for h0 in iter_pos(lad, rest, i):
            ext = list(iter_pos(lad, (0,), i))
            hits = 0
            for ha in ext:
                h = type(h0)(uu, i, ha.pairs + h0.pairs)
                hits += coincides_part2(lad, xs, h, w, 0, 1, rule1, rule2)
            direct.append(Fraction(hits, len(ext)))
        cl["part2_matches_count"].record(direct == rep.fractions, xi)
    # threshold arithmetic against the exact norm at density 2^-d
    for k in (2, 3, 4):
        for d in range(0, 3**k * 2 + 2):
            cl["threshold_agrees"].record(threshold_fires(k, d) == nor0_at_density(k, Fraction(1, 2**d)).exact_zero, [k, d])
    # the obstruction on creatures cut down to coincidences
    xs = histories(lad, u, i)[0]
    for e1, e2 in itertools.product(range(side), repeat=2):
        pts = [h for h in iter_pos(lad, u, i)
               if g_inv_f(succ_apply(lad, xs, h)[i], alpha, e1) == e2]
        if not pts:
            continue
        c = Creature(characteristic(lad, u, i, pts), 0)
        rep = nor_zero_obstruction(c, xs, alpha, lambda h, e=e1: e, lambda h, e=e2: e)
        ok = rep.hypothesis and rep.counting_ok and (rep.exact_zero or not rep.fires)
        cl["obstruction_consistent"].record(bool(ok), [e1, e2])
    return SuiteResult("2q.29", cfg, [lad], cl, {"max_fraction": frac(max(fr_all)), "bound": frac(bound)})


def _creature_pair(lad: ParamLadder, rng: random.Random, core: bool, size: int):
    u1, u2 = ((0, 2), (1, 2)) if core else ((0,), (1,))
    i = lad.levels - 1
    if not core:
        F1 = sample_function(lad, u1, i, size, rng)
        F2 = WeightedPos(lad, u2, i, {type(h)(u2, i, h.pairs): v for h, v in F1.weights.items()})
        return Creature(F1, 0), Creature(F2, 0), u1, u2
    # equal fiber counts over a few cores, drawn independently per side
    cores = rng.sample(pos_enumerate(lad, (2,), i), max(1, size // 8))
    tails = pos_enumerate(lad, (0,), i)
    w1, w2 = {}, {}
    for g in cores:
        for a, b in zip(rng.sample(tails, 16), rng.sample(tails, 16)):
            w1[PosFunc(u1, i, a.pairs + g.pairs)] = Fraction(1)
            w2[PosFunc(u2, i, b.pairs + g.pairs)] = Fraction(1)
    return Creature(weighted(lad, u1, i, w1), 0), Creature(weighted(lad, u2, i, w2), 0), u1, u2


def _gamma_direct(lad: ParamLadder, d1: Creature, d2: Creature, H1, H2, a1: int, a2: int) -> bool:
    """(gamma) by enumerating set(F_d1 * F_d2) for every history of length i."""
    i = d1.level
    F = product(d1.F, d2.F)
    for xs in histories(lad, F.u, i):
        for h in F.weights:
            ys = succ_apply(lad, xs, h)
            e1 = H1(restrict_history(ys, d1.u))
            e2 = H2(restrict_history(ys, d2.u))
            if e1 == e2 and g_inv_f(ys[i], a1, e1) == g_inv_f(ys[i], a2, e2):
                return False
    return True


def suite_corollary(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1,2"])
    rng = cfg.rng("corollary")
    cl = _clauses("alpha", "gamma", "gamma_enumerated", "sigma", reported=["beta", "two_pass_gamma"])
    if lad.paper_scale:
        cl["beta"].asserted = True
    methods: dict[str, int] = {}
    n = cfg.count(30)
    for idx in range(n):
        core = idx % 3 == 2
        c1, c2, u1, u2 = _creature_pair(lad, rng, core, rng.randint(32, 64))
        i = c1.level
        if idx % 10 == 9:
            H1 = BranchLabeling.constant(u1, i, 0)
            H2 = BranchLabeling.constant(u2, i, 1)
        else:
            H1 = BranchLabeling.seeded(lad, u1, i, rng.getrandbits(32), f"c{idx}")
            H2 = BranchLabeling.seeded(lad, u2, i, rng.getrandbits(32), f"d{idx}")
        res = disjointify_creatures(c1, c2, H1, H2, u1[0], u2[0])
        methods[res.method] = methods.get(res.method, 0) + 1
        for k in ("alpha", "gamma", "sigma", "beta"):
            cl[k].record(bool(res.clauses[k]), idx)
        cl["two_pass_gamma"].record(res.method == "two-pass", idx)
        cl["gamma_enumerated"].record(_gamma_direct(lad, res.d1, res.d2, H1, H2, u1[0], u2[0]), idx)
    return SuiteResult("cruccor", cfg, [lad], cl, {"methods": methods})


def _check_forced(q: Condition, nm: NamePair, i: int) -> tuple[int, int]:
    """Independent recheck: (equal-label histories, those with equal g^-1 f images)."""
    equal = bad = 0
    for ys in pos_of(q, i + 1):
        e1 = nm.H1[i](restrict_history(ys, nm.H1[i].u))
        e2 = nm.H2[i](restrict_history(ys, nm.H2[i].u))
        if e1 == e2:
            equal += 1
            bad += g_inv_f(ys[i], nm.alpha1, e1) == g_inv_f(ys[i], nm.alpha2, e2)
    return equal, bad


def suite_branch_amalgamation(cfg: RunConfig) -> SuiteResult:
    (lad,) = cfg.ladders(["n=0,1,2"])
    H = cfg.horizon or lad.levels
    rng = cfg.rng("branches")
    cl = _clauses("dominates", "forced_disjointness", "recheck", "corollaries",
                  reported=["premise_routed_equal_labels", "skipped_levels"])
    n = cfg.count(10)
    for idx in range(n):
        core = idx % 3 == 2
        u1, u2 = ((0, 2), (1, 2)) if core else ((0,), (1,))
        i0 = H - 1
        p1 = seeded_condition(lad, u1, i0, H, rng, rng.randint(32, 64))
        p2 = transfer(p1, op_map(u1, u2))
        if core and i0 == lad.levels - 1:
            # transfer copies leave one point per core fiber; use independent dense fibers
            c1, c2, _, _ = _creature_pair(lad, rng, True, rng.randint(32, 64))
            p1 = Condition(lad, u1, p1.xs, (c1,), H)
            p2 = Condition(lad, u2, p2.xs, (c2,), H)
        levels = range(p1.i, H)
        if idx % 4 == 3:
            H1 = {lv: BranchLabeling.constant(u1, lv, 0) for lv in levels}
            H2 = {lv: BranchLabeling.constant(u2, lv, 0) for lv in levels}
        else:
            s = rng.getrandbits(32)
            H1 = {lv: BranchLabeling.seeded(lad, u1, lv, s, "x") for lv in levels}
            H2 = {lv: BranchLabeling.seeded(lad, u2, lv, s, "y") for lv in levels}
        nm = NamePair(u1[0], u2[0], H1, H2)
        res = amalgamate_disjoint(p1, p2, [nm])
        cl["dominates"].record(all(res.dominates), idx)
        cl["corollaries"].record(all(r.passed for r in res.corollaries.values()), idx)
        for chk in res.checks:
            cl["forced_disjointness"].record(chk.ok, [idx, chk.level])
            cl["premise_routed_equal_labels"].record(chk.equal == 0, [idx, chk.level, chk.equal])
            eq, bad = _check_forced(res.q, nm, chk.level)
            cl["recheck"].record(bad == 0 and eq == chk.equal, [idx, chk.level])
        for lv, why in res.skipped:
            cl["skipped_levels"].record(False, [idx, lv, why])
    cl["premise_routed_equal_labels"].note = "failures are level checks where some labels agree and the premise carried the check"
    return SuiteResult("3c.34", cfg, [lad], cl)


SUITES: dict[str, tuple[Callable[[RunConfig], SuiteResult], str]] = {
    "2q.3": (suite_cones, "cone criterion and the tree identities, exhaustive"),
    "2q.9": (suite_densify, "dyadic rounding and densify"),
    "2q.23": (suite_norms, "norm values, monotonicity, bigness and halving"),
    "3.10A": (suite_restriction, "restriction and extension, exhaustive"),
    "x38": (suite_products, "balanced product bound, exhaustive"),
    "2q.45": (suite_projections, "projections, cylinder lifts and complete_lift, exhaustive"),
    "2q.52": (suite_amalgamation, "Delta-system amalgamation, seeded"),
    "3c.30": (suite_step, "disjointification step, exhaustive plus seeded"),
    "3c.26": (suite_level, "level loop, seeded"),
    "2q.29": (suite_obstruction, "coincidence counting and the nor0 threshold"),
    "cruccor": (suite_corollary, "creature corollary, seeded"),
    "3c.34": (suite_branch_amalgamation, "amalgamation with disjoint branches, seeded"),
}


def run_suite(ident: str, cfg: RunConfig | None = None) -> SuiteResult:
    if ident not in SUITES:
        raise KeyError(ident)
    return SUITES[ident][0](cfg or RunConfig())
