import json
from fractions import Fraction

import pytest

from creaturelab.certs import canonical_json, content_hash, frac, parse_frac, write_atomic
from creaturelab.cli import main

PLAN = {
    "ladder": "n=0,1,2",
    "depth": 2,
    "horizon": 3,
    "splits": [0, 0],
    "oracles": [{"level": 1, "id": "lift", "params": {"to": 2, "width": 2}}],
    "names": [{"level": 0, "m": 1, "k": 0, "seed": 7}],
    "base": {"i": 2, "size": 16, "seed": 1},
}


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


# certificates


def test_frac_round_trip():
    for q in (Fraction(0), Fraction(3, 7), Fraction(1)):
        assert parse_frac(frac(q)) == q
    assert parse_frac("5") == 5


def test_canonical_json_is_order_free():
    a = canonical_json({"b": 1, "a": [Fraction(1, 2), (1, 2)]})
    b = canonical_json({"a": [Fraction(1, 2), [1, 2]], "b": 1})
    assert a == b == '{"a":["1/2",[1,2]],"b":1}'
    assert content_hash({"x": 1}) == content_hash({"x": 1})


def test_write_atomic(tmp_path):
    p = write_atomic(tmp_path / "sub" / "f.txt", "one")
    write_atomic(p, "two")
    assert p.read_text() == "two"
    assert [q.name for q in p.parent.iterdir()] == ["f.txt"]


# commands


def test_params(tmp_path):
    assert run(tmp_path, "params", "--ladder", "n=0,1,2") == 0
    data = load(tmp_path, "params.json")
    assert [lv["pos_size_u1"] for lv in data["levels"]] == [1, 4, 256]
    assert data["paper_scale"] is False


def test_enumerate(tmp_path):
    assert run(tmp_path, "enumerate", "--ladder", "n=0,1", "--level", "1", "--list") == 0
    data = load(tmp_path, "enumerate-pos.json")
    assert data["count"] == 4 and len(data["listing"]) == 4
    assert run(tmp_path, "enumerate", "--ladder", "n=0,1,2", "--space", "histories", "--support", "0", "--level", "2") == 0
    assert load(tmp_path, "enumerate-histories.json")["count"] == 4


def test_norm(tmp_path):
    assert run(tmp_path, "norm", "--ladder", "n=0,1", "--level", "1", "--density", "1") == 0
    data = load(tmp_path, "norm.json")
    assert float(data["value"]) == pytest.approx(3)
    assert run(tmp_path, "norm", "--density", "2") == 1


def test_verify_fast_suite(tmp_path):
    assert run(tmp_path, "verify", "x38") == 0
    assert load(tmp_path, "verify-x38.json")["passed"]


def test_verify_usage_errors(tmp_path):
    assert run(tmp_path, "verify") == 2
    assert run(tmp_path, "verify", "nope") == 2


def test_amalgamate_and_disjointify(tmp_path):
    assert run(tmp_path, "amalgamate", "--seed", "3") == 0
    assert run(tmp_path, "disjointify", "--seed", "3") == 0
    assert load(tmp_path, "disjointify.json")["passed"]


def test_bad_ladder_exits_one(tmp_path):
    assert run(tmp_path, "params", "--ladder", "n=1,2") == 1


def test_cap_exits_three(tmp_path):
    assert run(tmp_path, "enumerate", "--ladder", "n=0,1,2", "--support", "0,1", "--level", "2", "--list", "--cap", "10") == 3


def test_unknown_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_fuse_code_replay(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps(PLAN))
    assert run(tmp_path, "fuse", str(plan)) == 0
    dump = tmp_path / "fusion-tree.json"
    first = dump.read_bytes()
    assert run(tmp_path, "fuse", "--replay", str(dump)) == 0
    assert run(tmp_path, "code", str(dump)) == 0
    code = load(tmp_path, "code.json")
    assert code["passed"] and len(code["leaves"]) == 3
    code_bytes = (tmp_path / "code.json").read_bytes()
    # a second full run writes the same bytes
    assert run(tmp_path, "fuse", str(plan)) == 0
    assert run(tmp_path, "code", str(dump)) == 0
    assert dump.read_bytes() == first
    assert (tmp_path / "code.json").read_bytes() == code_bytes


def test_replay_detects_tampering(tmp_path):
    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps(PLAN))
    assert run(tmp_path, "fuse", str(plan)) == 0
    dump = tmp_path / "fusion-tree.json"
    dump.write_text(dump.read_text().replace('"passed": true', '"passed": false'))
    assert run(tmp_path, "fuse", "--replay", str(dump)) == 1
    assert run(tmp_path, "code", str(dump)) == 1
