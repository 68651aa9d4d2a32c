import json
import subprocess
import sys
from pathlib import Path

import pytest

from recondiv.cli import main

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
RAT = str(INSTANCES / "rat_multiplicative.json")
NO_EF = str(INSTANCES / "no_ef_two_agents.json")
ADDITIVE = str(INSTANCES / "additive_example.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_ef_reports_cycle(capsys):
    code, out, _ = run(capsys, "check-ef", NO_EF)
    assert code == 0
    assert "not EF-able" in out and "(1,2)" in out


def test_check_ef_json(capsys):
    code, out, _ = run(capsys, "check-ef", NO_EF, "--json")
    doc = json.loads(out)
    assert doc["ef_able"] is False and doc["cycle_mean"] == "2"


def test_solve_minenvy(capsys):
    code, out, _ = run(capsys, "solve-minenvy", NO_EF, "--json")
    doc = json.loads(out)
    assert code == 0 and doc["value"] == "2" and doc["payments"] == ["-1/2", "1/2"]


def test_solve_minenvy_exhaustive(capsys):
    code, out, _ = run(capsys, "solve-minenvy", ADDITIVE, "--exhaustive")
    assert code == 0 and "min max envy" in out


def test_solve_mindisprop_fixed_assignment(capsys):
    code, out, _ = run(capsys, "solve-mindisprop", RAT, "--assignment", "a2,a1")
    assert code == 0
    assert "-4.50 4.50" in out


def test_decide_prop(capsys):
    code, out, _ = run(capsys, "decide-prop", NO_EF)
    assert code == 0 and "not PROP-able" in out


def test_analyze_manipulation(capsys):
    code, out, _ = run(capsys, "analyze-manipulation", RAT, "--agent", "1", "--misreport", "t3=1.2,t4=0.5",
                       "--scenarios", "given,rat,random:20", "--json")
    doc = json.loads(out)
    assert code == 0
    assert "adversarial" in doc["loss_witnesses"]
    assert doc["classification"] != "profitable-and-safe"


@pytest.mark.parametrize("fmt", ["table", "csv", "json"])
def test_report_formats(capsys, fmt):
    code, out, _ = run(capsys, "report", ADDITIVE, "--format", fmt)
    assert code == 0 and "min-disprop" in out


def test_generate_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["generate", "--agents", "5", "--seed", "3", "-o", str(a)]) == 0
    assert main(["generate", "--agents", "5", "--seed", "3", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    code, out, _ = run(capsys, "report", str(a), "--format", "csv")
    assert code == 0 and out.startswith("mechanism,")


def test_experiment_table(capsys):
    code, out, _ = run(capsys, "experiment", "--agents", "6", "--seed", "1", "--repetitions", "2")
    assert code == 0 and "dominance violations: 0" in out and "synthetic" in out


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "check-ef", str(tmp_path / "missing.json"))[0] == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run(capsys, "report", str(bad))[0] == 3
    assert run(capsys, "check-ef", NO_EF, "a1,a1")[0] == 4
    assert run(capsys, "solve-mindisprop", RAT, "--exact")[0] == 4
    assert run(capsys, "analyze-manipulation", RAT, "--agent", "1", "--misreport", "t3")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["no-such-command"])
    assert info.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "recondiv", "decide-prop", NO_EF, "--json"],
                         capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["prop_able"] is False
