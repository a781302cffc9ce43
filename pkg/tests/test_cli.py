from __future__ import annotations

import io
import json
import re
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revelation import cli
from revelation.errors import InstanceFormatError, SpaceValidationError
from revelation.fixtures import example1, example2
from revelation.mechanisms import audit_mechanism, naive_mechanism
from revelation.oracle import InstanceSpec, random_instance
from revelation.serialization import (
    dumps_instance,
    instance_digest,
    load_instance,
    loads_instance,
    save_instance,
    to_jsonable,
)

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
EX1, EX2 = INSTANCES / "ex1.instance", INSTANCES / "ex2.instance"
RATIONAL = re.compile(r"^-?\d+/\d+$")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code, _ = cli.run_command([str(a) for a in argv], out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def _instance_json(**overrides):
    data = json.loads(EX1.read_text())
    data.update(overrides)
    return json.dumps(data)


# ---------------------------------------------------------------- file format


def test_shipped_fixtures_load_and_match_examples():
    a, b = load_instance(EX1), load_instance(EX2)
    assert a.ground == example1().ground and a.root == example1().root
    assert b.ground == example2().ground and b.named("P'") == example2().named("P'")
    assert instance_digest(a) == instance_digest(load_instance(EX1)) == instance_digest(example1())


def test_probabilities_not_summing_to_one():
    with pytest.raises(SpaceValidationError) as info:
        loads_instance(_instance_json(prob=["1/2", "1/3"]))
    [msg] = info.value.errors
    assert msg.startswith("sum:") and "5/6" in msg


def test_unknown_action_names_the_entry():
    text = _instance_json(u_d={"omega": {"a": "0", "z": "1"}, "nu": ["4", "0", "2"]})
    with pytest.raises(InstanceFormatError) as info:
        loads_instance(text)
    assert info.value.where == "u_d.omega.z"
    assert "unknown action 'z'" in str(info.value)


def test_broken_json_reports_line():
    with pytest.raises(InstanceFormatError) as info:
        loads_instance('{\n  "states": ["x"],\n  "actions": [\n}')
    assert info.value.where.startswith("line 4")


@pytest.mark.parametrize("overrides,where", [
    ({"prob": [0.5, 0.5]}, "prob[0]"),
    ({"prob": ["1/2"]}, "prob"),
    ({"u_e": {"omega": ["0", "2"], "nu": ["0", "2", "4"]}}, "u_e.omega"),
    ({"u_e": {"mu": ["0", "2", "4"]}}, "u_e.mu"),
    ({"dm_partition": [["omega"]]}, "dm_partition"),
    ({"partitions": {"full": [["omega", "nu"]]}}, "partitions.full"),
    ({"format": "other/2"}, "format"),
    ({"extra": 1}, "extra"),
])
def test_parse_errors_name_the_field(overrides, where):
    with pytest.raises(InstanceFormatError) as info:
        loads_instance(_instance_json(**overrides))
    assert info.value.where == where


def test_mapping_rows_and_probabilities_accepted():
    text = _instance_json(prob={"nu": "1/2", "omega": "1/2"},
                          u_d={"omega": {"c": 0, "b": "6", "a": "0"}, "nu": ["4", "0", "2"]})
    assert loads_instance(text).ground == example1().ground


def test_missing_utility_is_a_validation_error():
    text = _instance_json(u_d={"omega": {"a": "0", "b": "6"}, "nu": ["4", "0", "2"]})
    with pytest.raises(SpaceValidationError) as info:
        loads_instance(text)
    assert info.value.errors == ["totality: missing utility entry u_d(omega, c)"]


def test_digest_ignores_formatting():
    inst = example2()
    compact = json.dumps(json.loads(dumps_instance(inst)), separators=(",", ":"))
    assert instance_digest(loads_instance(compact)) == instance_digest(inst)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(2, 5))
def test_save_load_round_trip(tmp_path_factory, seed, n, m):
    inst = random_instance(InstanceSpec(seed=seed, n_states=n, n_actions=m))
    path = tmp_path_factory.mktemp("rt") / "x.instance"
    save_instance(inst, path)
    back = load_instance(path)
    assert back.ground == inst.ground and back.root == inst.root
    assert instance_digest(back) == instance_digest(inst)


def test_to_jsonable_refuses_floats():
    with pytest.raises(TypeError):
        to_jsonable({"x": 0.5})


# ---------------------------------------------------------------- commands


def test_validate():
    code, out, _ = run("validate", EX2)
    assert code == 0
    assert "3 states, 4 actions, 5 awareness levels" in out
    assert instance_digest(example2()) in out


def test_solve_game_example2():
    code, out, _ = run("solve", EX2, "--mode", "game", "--tiebreak", "expert-min", "--expert", "full")
    assert code == 0
    lines = out.splitlines()
    assert "V_d=2  V_e=1" in lines[1]
    assert "V_d=7/3  V_e=5/3" in lines[2]
    assert lines[-1] == "final: omega->a, nu->b, upsilon->d  V_d=8/3  V_e=2  rent=2/3"


def test_solve_game_partial_expert():
    code, out, _ = run("solve", EX2, "--expert", "P'")
    assert code == 0 and "V_d=7/3  V_e=5/3" in out.splitlines()[-1]


def test_solve_mechanisms():
    code, out, _ = run("solve", EX2, "--mode", "mech-e", "--expert", "full")
    assert code == 0 and "omega->b, nu->b, upsilon->d  V_d=2  V_e=7/3" in out
    code, out, _ = run("solve", EX2, "--mode", "mech-d", "--expert", "full")
    assert code == 0 and "omega->a, nu->b, upsilon->d  V_d=8/3  V_e=2" in out


def test_best_response_lists_chains():
    code, out, _ = run("best-response", EX2, "--tiebreak", "expert-max")
    assert code == 0
    assert "best value V_e=2" in out
    assert "{omega,nu,upsilon} -> {omega | nu,upsilon} -> {omega | nu | upsilon}" in out


def test_verify_and_audit_pass():
    code, out, _ = run("verify", EX1)
    assert code == 0 and "FAIL" not in out and out.rstrip().endswith("checks passed")
    for mech in ("dm", "expert"):
        code, out, _ = run("audit", EX2, "--mech", mech)
        assert code == 0 and out.count("PASS") == 4


def test_property_failure_exits_one(monkeypatch):
    monkeypatch.setattr(cli, "audit_mechanism", lambda inst, kind: audit_mechanism(inst, mechanism=naive_mechanism))
    code, out, _ = run("audit", EX1, "--mech", "dm")
    assert code == 1
    assert "FAIL ic_e" in out and "witness:" in out


def test_generate_round_trip(tmp_path):
    path = tmp_path / "g.instance"
    code, out, _ = run("generate", "--seed", 5, "--states", 4, "--actions", 3, "--out", path)
    assert code == 0
    inst = random_instance(InstanceSpec(seed=5, n_states=4, n_actions=3))
    assert instance_digest(load_instance(path)) == instance_digest(inst)
    assert instance_digest(inst) in out


@pytest.mark.parametrize("argv", [
    ("solve", EX2, "--mode", "nope"),
    ("solve", EX2, "--expert", "unknown"),
    ("generate", "--seed", 1, "--states", 9, "--out", "unused.instance"),
    ("frobnicate",),
    ("validate", INSTANCES / "missing.instance"),
])
def test_usage_errors_exit_two(argv):
    code, _, err = run(*argv)
    assert code == 2 and err


def test_bad_file_exits_two(tmp_path):
    bad = tmp_path / "bad.instance"
    bad.write_text(_instance_json(prob=["1/2", "1/3"]))
    code, _, err = run("validate", bad)
    assert code == 2 and "sum: probabilities sum to 5/6" in err
    bad.write_text(_instance_json(u_d={"omega": {"zz": "1"}}))
    code, _, err = run("validate", bad)
    assert code == 2 and "u_d.omega.zz" in err


def _no_floats(text):
    def boom(x):
        raise AssertionError(f"float in report: {x}")

    return json.loads(text, parse_float=boom)


def _numeric_leaves(obj):
    if isinstance(obj, dict):
        for v in obj.values():
            yield from _numeric_leaves(v)
    elif isinstance(obj, list):
        for v in obj:
            yield from _numeric_leaves(v)
    elif isinstance(obj, str) and re.match(r"^-?\d", obj):
        yield obj


def test_machine_report(tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = run("solve", EX2, "--report", path)
    assert code == 0
    report = _no_floats(path.read_text())
    assert report["schema"] == "revelation-report/1"
    assert report["instance_digest"] == instance_digest(example2())
    assert report["status"] == "ok"
    res = report["result"]
    assert (res["payoff_d"], res["payoff_e"], res["rent"]) == ("8/3", "2/1", "2/3")
    assert res["rounds"][1]["partition"] == [["omega"], ["nu", "upsilon"]]
    leaves = list(_numeric_leaves(res))
    assert leaves and all(RATIONAL.match(x) for x in leaves)


def test_reports_are_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run("verify", EX2, "--report", a)
    run("verify", EX2, "--report", b)
    text = a.read_text()
    assert text == b.read_text().replace(str(b), str(a))
    _no_floats(text)


def test_error_report_written(tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = run("solve", EX2, "--expert", "unknown", "--report", path)
    report = json.loads(path.read_text())
    assert code == 2 and report["status"] == "error" and "unknown" in report["error"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "revelation.cli", "validate", str(EX1)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("valid:")
