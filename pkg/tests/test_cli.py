import csv
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import jsonschema
import numpy as np
import pytest

from equiaffine import cli, exprlang

ROOT = Path(__file__).parents[1]
SCHEMA = json.loads((ROOT / "docs" / "invariant_report.schema.json").read_text())


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_helicoid_report(capsys):
    code, out, _ = run(capsys, "invariants", "--builtin", "helicoid3", "--point", "0,1,1")
    assert code == 0
    rec = json.loads(out)
    jsonschema.validate(rec, SCHEMA)
    assert rec["Ucal"] == pytest.approx(-1.0, abs=1e-12)
    assert rec["kappa_eq"] == pytest.approx(0.0, abs=1e-12)


def test_degenerate_point_exits_2_with_report(capsys):
    code, out, _ = run(capsys, "invariants", "--expr", "x1^2*x3+x1*x2*x4+x2^2*x5",
                       "--vars", "x1,x2,x3,x4,x5", "--point", "1,1,1,1,1")
    assert code == 2
    rec = json.loads(out)
    jsonschema.validate(rec, SCHEMA)
    assert rec["flags"]["nondegenerate"] is False
    assert rec["gauss_kronecker"] == pytest.approx(0.0, abs=1e-14)


def test_critical_point_exits_2_with_null_report(capsys):
    code, out, _ = run(capsys, "invariants", "--builtin", "sphere", "--point", "0,0,0", "--point", "1,0,0")
    assert code == 2
    recs = [json.loads(line) for line in out.splitlines()]
    assert len(recs) == 2
    for rec in recs:
        jsonschema.validate(rec, SCHEMA)
    assert recs[0]["flags"]["regular_point"] is False and recs[0]["Ucal"] is None
    assert recs[1]["flags"]["regular_point"] is True


def test_idempotent_point_token(capsys):
    code, out, _ = run(capsys, "invariants", "--builtin", "symdet", "--param", "2", "--point", "E0")
    assert code == 0
    assert json.loads(out)["kappa_eq"] == pytest.approx(2 ** -0.75, abs=1e-9)
    code, _, err = run(capsys, "invariants", "--builtin", "helicoid3", "--point", "E0")
    assert code == 1 and "symdet" in err


def test_parse_error_reports_offset(capsys):
    code, out, err = run(capsys, "invariants", "--expr", "x1 + * x2", "--point", "1,2")
    assert code == 1 and out == ""
    assert "offset 5" in err


def test_domain_error_exits_1(capsys):
    code, _, err = run(capsys, "invariants", "--expr", "log(x1) + x2", "--point=-1,0")
    assert code == 1 and "log" in err


@pytest.mark.parametrize("argv", [
    ["invariants", "--point", "1,2,3"],
    ["invariants", "--builtin", "helicoid3", "--expr", "x1", "--point", "1"],
    ["invariants", "--builtin", "helicoid3"],
    ["invariants", "--builtin", "helicoid3", "--point", "1,2"],
    ["invariants", "--builtin", "helicoid3", "--point", "1,2,3", "--tol-nondegen", "0"],
    ["invariants", "--builtin", "nosuch", "--point", "1"],
    ["verify", "--suite", "nosuch"],
    ["flow", "--builtin", "helicoid3", "--point", "0,1,0", "--steps", "0"],
    ["sample", "--builtin", "helicoid3", "--grid", "0x3"],
    ["nosuch"],
    [],
])
def test_usage_errors_exit_1(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 1


def test_csv_header_is_stable(capsys):
    code, out, _ = run(capsys, "invariants", "--builtin", "helicoid3", "--point", "0,1,1", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["u", "x", "y", "F", "H", "Ucal", "kappa_eq", "gauss_kronecker", "regular_point", "nondegenerate"]
    assert float(rows[1][5]) == -1.0


def test_points_file_and_out(tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    pts.write_text("u,x,y\n0,1,1\n# comment\n0.5,1,-1\n")
    out = tmp_path / "out.jsonl"
    code, stdout, _ = run(capsys, "invariants", "--builtin", "helicoid3", "--points-file", str(pts), "--out", str(out))
    assert code == 0 and stdout == ""
    assert len(out.read_text().splitlines()) == 2


def test_sample_helicoid_grid(capsys):
    code, out, _ = run(capsys, "sample", "--builtin", "helicoid3", "--t", "0", "--grid", "50x50", "--format", "csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["u", "x", "y"] and len(rows) == 2501
    fld = exprlang.builtin("helicoid3")
    pts = np.array(rows[1:], dtype=float)
    assert max(abs(fld.value(p)) for p in pts) <= 1e-9


def test_sample_genhel_level_one(capsys):
    code, out, _ = run(capsys, "sample", "--builtin", "genhel", "--t", "1", "--grid", "6x4", "--format", "csv")
    assert code == 0
    fld = exprlang.builtin("genhel")
    pts = np.array(list(csv.reader(io.StringIO(out)))[1:], dtype=float)
    assert len(pts) == 6 * 6 * 4 * 4
    assert max(abs(fld.value(p) - 1) for p in pts) <= 1e-9


def test_sample_uncalibrated_exits_2(capsys):
    code, _, err = run(capsys, "sample", "--builtin", "ruled", "--param", "x1;x1^2+1")
    assert code == 2 and "calibrated" in err


def test_flow_helicoid(capsys):
    code, out, err = run(capsys, "flow", "--builtin", "helicoid3", "--point", "0,1,0", "--t-end", "1", "--steps", "100")
    assert code == 0
    doc = json.loads(out)
    rows = doc["report"]["rows"]
    assert rows[0]["linearity_residual"] <= 1e-8
    assert "linearity residual" in err
    assert len(doc["trajectories"][0]["times"]) == 101


def test_flow_exact_genhel(capsys):
    code, out, _ = run(capsys, "flow", "--builtin", "genhel", "--point", "0.1,0.2,0.5,0.3,-0.2", "--exact")
    assert code == 0
    assert json.loads(out)["report"]["rows"][0]["exact_error"] <= 1e-6


def test_flow_degenerate_start_exits_2(capsys):
    code, _, _ = run(capsys, "flow", "--builtin", "gn", "--point", "1,1,1,1,1")
    assert code == 2


def test_verify_suite(capsys):
    code, out, err = run(capsys, "verify", "--suite", "flow", "--seed", "3")
    assert code == 0
    assert "criterion 12 PASS" in out and "PASS" in err


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "flow", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and [c["number"] for c in doc["criteria"]] == [12, 104]


def test_output_is_deterministic(capsys):
    argv = ["verify", "--suite", "ruled", "--seed", "11"]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first[0] == 0 and first[1] == second[1]
    argv = ["flow", "--builtin", "symdet", "--point", "1.2,0.3,0.9", "--steps", "20", "--format", "csv"]
    assert run(capsys, *argv)[1] == run(capsys, *argv)[1]


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("EQA_SEED", "5")
    a = run(capsys, "verify", "--suite", "ruled", "--format", "json")
    b = run(capsys, "verify", "--suite", "ruled", "--format", "json", "--seed", "5")
    assert json.loads(a[1])["seed"] == 5 and a[1] == b[1]
    monkeypatch.setenv("EQA_SEED", "abc")
    assert run(capsys, "verify", "--suite", "flow")[0] == 1


def test_console_entry_point():
    env = dict(os.environ, PYTHONPATH=str(ROOT / "src"))
    res = subprocess.run([sys.executable, "-m", "equiaffine", "invariants", "--builtin", "helicoid3",
                          "--point", "0,1,1"], capture_output=True, text=True, env=env)
    assert res.returncode == 0
    assert json.loads(res.stdout)["Ucal"] == pytest.approx(-1.0)
