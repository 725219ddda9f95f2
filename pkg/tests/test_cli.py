import json
import math
import subprocess
import sys

import pytest

from vardescent.bicomplex import parse_form
from vardescent.cli import COMMANDS, Flags, main, render_machine, render_text, run
from vardescent.errors import DanglingReference, ParseError, SchemaError
from vardescent.problem import fixture_path, load_problem, problem_schema

EXAMPLES = ("theta1", "synth2", "synth2_broken", "poisson2", "cyl2", "torus2")


def _doc(tmp_path, doc, name="p.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def _raw(name):
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


def _strip_timing(doc):
    return {k: v for k, v in doc.items() if k != "timing"}


# -- loading ----------------------------------------------------------------------


def test_load_theta1():
    p = load_problem(fixture_path("theta1"))
    assert p.name == "THETA1" and p.n == 1 and p.jet_order == 4
    assert len(p.charts) == 3
    assert len(p.cover.simplices(1)) == 3 and p.cover.simplices(2) == []
    assert [c.name for c in p.charts] == ["U0", "U1", "U2"]
    assert p.cycle is not None and p.section is not None and p.solution is not None
    assert len(p.digest) == 64


@pytest.mark.parametrize("name", EXAMPLES)
def test_examples_validate_against_schema(name):
    import jsonschema
    jsonschema.Draft202012Validator(problem_schema()).validate(_raw(name))
    load_problem(fixture_path(name))


def test_undeclared_field_is_dangling(tmp_path):
    doc = _raw("theta1")
    doc["densities"] = {"*": "1/2*v_t^2"}
    with pytest.raises(DanglingReference, match="densities"):
        load_problem(_doc(tmp_path, doc))


def test_unknown_chart_is_dangling(tmp_path):
    doc = _raw("theta1")
    doc["transitions"][0]["to"] = "U9"
    with pytest.raises(DanglingReference):
        load_problem(_doc(tmp_path, doc))


def test_nerve_not_closed_is_schema_error(tmp_path):
    doc = _raw("synth2")
    doc["nerve"] = [s for s in doc["nerve"] if s != ["B", "C"]]
    doc["transitions"] = [t for t in doc["transitions"] if (t["from"], t["to"]) != ("B", "C")]
    with pytest.raises(SchemaError, match="closed under faces"):
        load_problem(_doc(tmp_path, doc))


def test_schema_violation_reports_path(tmp_path):
    doc = _raw("theta1")
    doc["dimension"] = 0
    with pytest.raises(SchemaError, match="dimension"):
        load_problem(_doc(tmp_path, doc))
    del doc["dimension"]
    with pytest.raises(SchemaError):
        load_problem(_doc(tmp_path, doc))


def test_parse_error_carries_position(tmp_path):
    doc = _raw("theta1")
    doc["densities"] = {"*": "1/2*u_t^^2"}
    with pytest.raises(ParseError) as exc:
        load_problem(_doc(tmp_path, doc))
    assert exc.value.position is not None
    assert "densities" in str(exc.value)


def test_unreadable_file(tmp_path):
    with pytest.raises(SchemaError):
        load_problem(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(SchemaError):
        load_problem(bad)


# -- commands -----------------------------------------------------------------------


@pytest.fixture(scope="module")
def theta1():
    return load_problem(fixture_path("theta1"))


def test_theorem1_command(theta1):
    doc, code = run("theorem1", theta1)
    assert code == 0 and doc["status"] == "pass"
    results = doc["reports"][0]["results"]
    expected = parse_form("-(u_tt + 1)*theta(u,[])^dx(t)", theta1.cover.chart(0))
    assert parse_form(results["source_form"], theta1.cover.chart(0)) == expected
    assert doc["reports"][0]["notes"]


def test_action_command(theta1):
    doc, code = run("action", theta1)
    assert code == 0
    res = doc["reports"][0]["results"]
    assert abs(res["action"] - math.pi / 2) < 1e-9
    assert "quadrature_nodes" in res["quadrature"]
    text = render_text(doc)
    assert "action" in text and "refinement_invariance" in text


def test_action_without_cycle_is_input_error():
    doc, code = run("action", load_problem(fixture_path("poisson2")))
    assert code == 2 and doc["error"]["type"] == "SchemaError"


def test_verify_broken_synth2():
    doc, code = run("verify", load_problem(fixture_path("synth2_broken")))
    assert code == 1
    text = render_text(doc)
    assert "c[0,1,2] = 2/3" in text


def test_descend_infeasible_exit_3(tmp_path):
    doc = {"name": "NOPRIM", "dimension": 1,
           "charts": [{"id": "A", "coords": ["t"]}, {"id": "B", "coords": ["t"]}],
           "nerve": [["A", "B"]], "transitions": [{"from": "A", "to": "B", "identity": True}],
           "densities": {"A": "0", "B": "u"}}
    problem = load_problem(_doc(tmp_path, doc))
    out, code = run("descend", problem)
    assert code == 3
    assert out["error"]["type"] == "NoPrimitiveInAnsatz"
    assert out["error"]["step"] == 1 and out["error"]["simplex"] == [0, 1]


def test_on_shell_and_sign_audit(theta1):
    assert run("on-shell", theta1)[1] == 0
    doc, code = run("sign-audit", theta1)
    assert code == 0
    assert doc["reports"][0]["results"]["consistent_conventions"] == ["deligne-degree"]


@pytest.mark.parametrize("command", COMMANDS)
def test_every_command_on_theta1(theta1, command):
    doc, code = run(command, theta1)
    assert code == 0, render_text(doc)


def test_unknown_command(theta1):
    with pytest.raises(ValueError):
        run("integrate", theta1)
    with pytest.raises(SystemExit) as exc:
        main(["integrate", str(fixture_path("theta1"))])
    assert exc.value.code == 2


def test_machine_report_is_deterministic(theta1):
    a, _ = run("theorem1", theta1)
    b, _ = run("theorem1", load_problem(fixture_path("theta1")))
    assert render_machine(_strip_timing(a)) == render_machine(_strip_timing(b))


def test_main_writes_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = main(["verify", str(fixture_path("synth2")), "--format", "machine", "--report", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert printed == out.read_text(encoding="utf-8")
    doc = json.loads(printed)
    assert doc["command"] == "verify" and doc["exit_code"] == 0
    assert set(doc) >= {"problem", "flags", "reports", "timing", "status"}


def test_main_load_error_exit_code(tmp_path, capsys):
    doc = _raw("theta1")
    doc["densities"] = {"*": "w"}
    assert main(["verify", str(_doc(tmp_path, doc))]) == 2
    assert "DanglingReference" in capsys.readouterr().err
    assert main(["verify", str(fixture_path("theta1")), "--jet-order", "0"]) == 2


def test_flags_propagate(theta1):
    doc, _ = run("action", theta1, Flags(quad_order=24))
    assert doc["flags"]["quad_order"] == 24


def test_console_entry_point_subprocess():
    proc = subprocess.run([sys.executable, "-m", "vardescent.cli", "theorem1", str(fixture_path("theta1"))],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout
