"""End-to-end tests of the command-line entry point, run in-process."""
from __future__ import annotations

import io
import json
from contextlib import redirect_stderr, redirect_stdout

from pptbell.cli import CSV_HEADER, main


def run(argv):
    """Invoke the CLI in-process, capturing both streams."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def test_bound_reports_zero():
    """The classical bound of every family member is zero."""
    for family, d in (("id", 3), ("id", 6), ("yu-oh", 4), ("d4-first", 4)):
        code, out, _ = run(["bound", "--family", family, "--d", str(d)])
        assert code == 0
        assert "classical bound: 0" in out
        assert "maximizing strategy" in out


def test_bound_usage_errors():
    """Out-of-range dimensions and the enumeration cap exit with usage code 2."""
    code, _, err = run(["bound", "--d", "2"])
    assert code == 2
    code, _, err = run(["bound", "--d", "64"])
    assert code == 2
    assert "error" in err or "d >= 3" in err
    code, _, _ = run(["bound", "--family", "d4-first", "--d", "5"])
    assert code == 2


def test_table_and_verify_pipeline(tmp_path):
    """A one-row table writes well-formed CSV and parameters that re-verify."""
    csv_path = tmp_path / "table.csv"
    code, out, _ = run(["table", "--d-min", "3", "--d-max", "3", "--restarts", "1",
                        "--seed", "0", "--out", str(csv_path),
                        "--params-dir", str(tmp_path)])
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == CSV_HEADER
    d_str, q_str, mode, seed = lines[1].split(",")
    assert d_str == "3"
    assert float(q_str) >= 0.000262
    assert mode == "full"
    assert seed == "0"

    params_file = tmp_path / "params_d3.json"
    payload = json.loads(params_file.read_text())
    assert payload["d"] == 3
    code, out, _ = run(["verify", str(params_file)])
    assert code == 0
    assert "verdict: pass" in out


def test_verify_catches_corruption(tmp_path):
    """Perturbing one stored coefficient flips the verdict to fail with exit 1."""
    code, _, _ = run(["table", "--d-min", "3", "--d-max", "3", "--restarts", "1",
                      "--seed", "0", "--out", str(tmp_path / "t.csv"),
                      "--params-dir", str(tmp_path)])
    assert code == 0
    params_file = tmp_path / "params_d3.json"
    payload = json.loads(params_file.read_text())
    payload["params"]["a00"] *= 1.001
    bad_file = tmp_path / "bad.json"
    bad_file.write_text(json.dumps(payload))
    code, out, _ = run(["verify", str(bad_file)])
    assert code == 1
    assert "verdict: fail" in out


def test_verify_rejects_garbage(tmp_path):
    """Unreadable or malformed parameter files exit with usage code 2."""
    code, _, _ = run(["verify", str(tmp_path / "missing.json")])
    assert code == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{not json")
    code, _, _ = run(["verify", str(junk)])
    assert code == 2
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"d": 4}))
    code, _, _ = run(["verify", str(empty)])
    assert code == 2


def test_curve_asymptotic_csv(tmp_path):
    """The asymptotic curve writes one decreasing row per grid point."""
    out_path = tmp_path / "curve.csv"
    code, _, _ = run(["curve", "--d-min", "50", "--d-max", "400", "--points", "5",
                      "--mode", "asymptotic", "--out", str(out_path)])
    assert code == 0
    lines = out_path.read_text().strip().splitlines()
    assert lines[0] == CSV_HEADER
    rows = [line.split(",") for line in lines[1:]]
    dims = [int(r[0]) for r in rows]
    vals = [float(r[1]) for r in rows]
    assert dims == sorted(dims)
    assert all(rows[i][2] == "asymptotic" for i in range(len(rows)))
    assert all(vals[i] > vals[i + 1] for i in range(len(vals) - 1))


def test_curve_stdout():
    """Without --out the curve rows go to stdout."""
    code, out, _ = run(["curve", "--d-min", "100", "--d-max", "200", "--points", "2",
                        "--mode", "asymptotic", "--out", "-"])
    assert code == 0
    assert out.splitlines()[0] == CSV_HEADER


def test_seesaw_short_run_writes_chart(tmp_path):
    """A tiny run reports no violation but still writes a verifiable chart file."""
    out_path = tmp_path / "chart.json"
    code, out, _ = run(["seesaw", "--d", "3", "--restarts", "2", "--max-cycles", "25",
                        "--rel-tol", "1e-8", "--out", str(out_path)])
    assert code == 0
    assert "no violation found above 1e-9" in out
    code, out, _ = run(["verify", str(out_path)])
    assert code == 0
    assert "verdict: pass" in out


def test_seesaw_usage_guards():
    """Dimension guards on the alternating search exit with usage code 2."""
    code, _, _ = run(["seesaw", "--d", "2"])
    assert code == 2
    code, _, _ = run(["seesaw", "--d", "3", "--state-dim", "5"])
    assert code == 2
