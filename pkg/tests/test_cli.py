import json
import math
from pathlib import Path

import pytest

from realfield.cli import run_cli
from realfield.results import dumps, records_from_json, strip_timestamp

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def mz_file(tmp_path):
    p = tmp_path / "mz.json"
    p.write_text(json.dumps({"kind": "mach_zehnder", "setup": 2, "trials": 1000, "seed": 1}))
    return p


def test_dumps_uses_17_significant_digits():
    text = dumps({"x": 0.1, "y": 1.0, "z": math.inf, "n": [1, 2.5]})
    assert '"x": 0.10000000000000001' in text
    assert '"y": 1.0' in text and '"z": null' in text
    assert json.loads(text)["n"] == [1, 2.5]


def test_simulate_then_report(tmp_path, mz_file, capsys):
    out = tmp_path / "res.json"
    assert run_cli(["simulate", str(mz_file), "--out", str(out), "--keep-records"]) == 0
    result = json.loads(out.read_text())
    assert result["detector_counts"] == {"det2": 1000}
    assert result["clicks_per_trial"] == [1]
    assert len(records_from_json(result["records"])) == 1000
    capsys.readouterr()
    assert run_cli(["report", str(out), "--format", "csv"]) == 0
    csv = capsys.readouterr().out.splitlines()
    assert csv[0] == "phase_rad,det1_count,det2_count,visibility"
    assert csv[1].startswith("0.0,0,1000,")
    assert run_cli(["report", str(out)]) == 0
    assert "mach_zehnder" in capsys.readouterr().out


def test_overrides_and_determinism(tmp_path, mz_file):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_cli(["simulate", str(mz_file), "--out", str(a), "--trials", "50", "--seed", "9"])
    run_cli(["simulate", str(mz_file), "--out", str(b), "--trials", "50", "--seed", "9",
             "--workers", "3"])
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert ra["trials"] == 50 and ra["seed"] == 9
    assert strip_timestamp(ra) == strip_timestamp(rb)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "mach_zehnder", "setup": 7, "trials": 1, "seed": 0}')
    assert run_cli(["simulate", str(bad)]) == 1
    assert "setup" in capsys.readouterr().err
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{nope")
    assert run_cli(["simulate", str(garbage)]) == 1
    assert run_cli(["simulate", str(tmp_path / "missing.json")]) == 2
    good = tmp_path / "good.json"
    good.write_text('{"kind": "mach_zehnder", "setup": 1, "trials": 1, "seed": 0}')
    assert run_cli(["simulate", str(good), "--out", str(tmp_path / "no" / "dir.json")]) == 2


@pytest.mark.parametrize("name", sorted(p.name for p in SCENARIOS.glob("*.json")))
def test_shipped_scenarios_run(name, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run_cli(["simulate", str(SCENARIOS / name), "--out", str(out), "--trials", "500"]) == 0
    assert run_cli(["report", str(out), "--format", "csv"]) == 0
    assert run_cli(["oracle", str(SCENARIOS / name)]) == 0
    assert capsys.readouterr().out


def test_histogram_csv_columns(tmp_path, capsys):
    out = tmp_path / "r.json"
    run_cli(["simulate", str(SCENARIOS / "double_slit.json"), "--out", str(out), "--trials", "2000"])
    capsys.readouterr()
    run_cli(["report", str(out), "--format", "csv"])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "bin_left_m,bin_right_m,count,pdf_value"
    assert sum(int(line.split(",")[2]) for line in lines[1:]) == 2000
    assert sum(float(line.split(",")[3]) for line in lines[1:]) == pytest.approx(1)


def test_oracle_output(capsys):
    assert run_cli(["oracle", str(SCENARIOS / "mz_setup2.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["detector_probs"] == {"det1": 0.0, "det2": 1.0}
