import json
import math
from pathlib import Path

import pytest

from invariance_pressure.cli import main, report_argv, run

SYSTEMS = Path(__file__).resolve().parent.parent / "systems"
EXAMPLE = str(SYSTEMS / "example.json")


def invoke(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze(capsys):
    code, out, _ = invoke(capsys, "analyze", EXAMPLE)
    rep = json.loads(out)
    assert code == 0 and rep["schema"] == "1" and rep["command"] == "analyze"
    res = rep["results"]
    assert res["hyperbolic"] and res["controllable"] and res["bounded_prediction"]
    assert res["class"] == "Neither"
    rep = run(["analyze", str(SYSTEMS / "rotation.json")])
    assert rep["results"]["class"] == "ControllableEverywhere"
    assert rep["warnings"]


def test_entropy_and_pressure():
    assert run(["entropy", EXAMPLE])["results"]["entropy"] == pytest.approx(math.log(2), abs=1e-12)
    assert run(["entropy", str(SYSTEMS / "saddle3.json")])["results"]["entropy"] == \
        pytest.approx(math.log(6), abs=1e-10)
    res = run(["pressure", EXAMPLE, "--potential", "u0+2"])["results"]
    assert res["pressure"] == pytest.approx(math.log(2) + 1, abs=1e-12)


def test_reach_csv(tmp_path):
    path = tmp_path / "r.csv"
    rep = run(["reach", EXAMPLE, "--steps", "2", "--output", "csv", "--csv-path", str(path)])
    assert rep["results"]["k"] == 2 and len(rep["results"]["vertices"]) == 4
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1" and len(lines) == 5


def test_control_set_and_spanning(tmp_path):
    rep = run(["control-set", EXAMPLE, "--horizon", "25"])
    assert rep["results"]["converged"] and rep["results"]["bounded_prediction"]
    out = tmp_path / "controls.json"
    rep = run(["spanning", EXAMPLE, "--tau0", "2", "--m", "3", "--xi", "0.1", "--controls-out", str(out)])
    assert rep["results"]["cardinality"] == 86
    dumped = json.loads(out.read_text())
    assert len(dumped["controls"]) == 86 and len(dumped["controls"][0]) == 6


def test_oracle_command(tmp_path):
    rep = run(["oracle", EXAMPLE, "--tau", "4", "--control-grid", "3", "--state-grid", "5"])
    res = rep["results"]
    assert math.isfinite(res["rate"]) and res["soundness_violations"] == 0
    path = tmp_path / "rates.csv"
    rep = run(["oracle", EXAMPLE, "--taus", "2,4", "--control-grid", "3", "--state-grid", "3",
               "--q-box", "[[-1,-2],[1,2]]", "--k-box", "[[-0.5,-1],[0.5,1]]",
               "--output", "csv", "--csv-path", str(path)])
    assert len(rep["results"]["estimates"]) == 2
    assert path.read_text().splitlines()[1].startswith("2,")


def test_deterministic_bytes(capsys):
    argv = ["pressure", EXAMPLE, "--potential", "(u0-0.3)^2+1", "--upper-bound", "--seed", "3"]
    _, first, _ = invoke(capsys, *argv)
    _, second, _ = invoke(capsys, *argv)
    assert first == second
    assert "wall_time" not in json.loads(first)
    _, timed, _ = invoke(capsys, *argv, "--timing")
    assert "wall_time" in json.loads(timed)


def test_report_round_trip(tmp_path):
    rep = run(["oracle", EXAMPLE, "--tau", "3", "--control-grid", "3", "--state-grid", "3",
               "--potential", "abs(u0)"])
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(rep["parameters"]["system"]))
    again = run(report_argv(rep, str(path)))
    assert again["results"] == rep["results"]
    assert again["parameters"] == rep["parameters"]


@pytest.mark.parametrize("argv,code,kind", [
    (["pressure", EXAMPLE, "--potential", "u0 +"], 1, "ParseError"),
    (["entropy", str(SYSTEMS / "rotation.json")], 2, "NotHyperbolic"),
    (["entropy", "/no/such/file.json"], 1, "SpecError"),
    (["bogus"], 1, "SpecError"),
    (["oracle", EXAMPLE, "--tau", "30", "--control-grid", "5", "--state-grid", "5",
      "--q-box", "[[-1,-2],[1,2]]"], 3, "BudgetExceeded"),
    (["oracle", EXAMPLE, "--control-grid", "3", "--state-grid", "3"], 1, "SpecError"),
    (["spanning", EXAMPLE, "--tau0", "2", "--m", "3", "--xi", "0.1", "--b0", "5"], 2, "CubeNotInD"),
])
def test_error_paths(capsys, argv, code, kind):
    rc, out, err = invoke(capsys, *argv)
    assert rc == code and out == ""
    lines = err.strip().splitlines()
    assert len(lines) == 1
    obj = json.loads(lines[0])
    assert obj["error"] == kind and obj["exit_code"] == code


def test_parse_error_offset(capsys):
    _, _, err = invoke(capsys, "pressure", EXAMPLE, "--potential", "(u0")
    assert json.loads(err)["offset"] == 3


def test_spec_error_pointer(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"A": [[1, 0], [0, 0]], "B": [[1], [1]], "U": {"type": "box", "lower": [-1], "upper": [1]}}))
    rc, _, err = invoke(capsys, "analyze", str(bad))
    assert rc == 1 and json.loads(err)["pointer"] == "/A"
