import csv
import io
import json
import subprocess
import sys

import pytest

from qcurv import cli


def _checks(reports):
    return {f"{r.suite}:{c.id}": c for r in reports for c in r.checks}


def test_verify_examples_reports_round_q(tmp_path, capsys):
    out = tmp_path / "r.json"
    reports, code = cli.run(["verify-examples", "--n", "6", "--out", str(out)])
    assert code == 0
    c = _checks(reports)["verify-examples:einstein.Q"]
    assert c.passed and c.measured == 24
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1 and doc["passed"] is True
    ids = {ch["id"]: ch for ch in doc["suites"][0]["checks"]}
    assert ids["split_model.Q"]["measured"] == "-79/100"
    assert "[PASS] verify-examples:einstein.Q measured=24" in capsys.readouterr().out


def test_csv_output_uses_rationals(tmp_path):
    out = tmp_path / "r.csv"
    assert cli.main(["verify-examples", "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    by_id = {r["id"]: r for r in rows}
    assert by_id["split_model.Q"]["expected"] == "-79/100"
    assert by_id["einstein.c1c2"]["measured"] == "24"
    assert all(r["passed"] == "true" for r in rows)


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cli.main(["verify-examples", "--seed", "3", "--out", str(a)])
    cli.main(["verify-examples", "--seed", "3", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_solve_trivial_background(tmp_path):
    out = tmp_path / "s.json"
    assert cli.main(["solve", "--n", "6", "--lmax", "64", "--tol", "1e-9", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    trace = doc["suites"][0]["config"]["trace"]
    assert len(trace) == 1 and doc["suites"][0]["passed"]


def test_solve_perturbed():
    reports, code = cli.run(["solve", "--amplitude", "0.01"])
    assert code == 0 and _checks(reports)["solve:solve.ratio"].measured < 0.5


def test_verify_green_n7():
    reports, code = cli.run(["verify-green", "--n", "7"])
    assert code == 0
    assert abs(_checks(reports)["verify-green:green.subleading"].measured + 1) < 0.3


@pytest.mark.slow
def test_neck_scaling_slope_table(tmp_path):
    out = tmp_path / "n.csv"
    reports, code = cli.run(["neck-scaling", "--b-list", "1/32,1/64,1/128,1/256", "--delta", "-0.5",
                             "--out", str(out)])
    assert code == 0
    c = _checks(reports)
    assert c["neck-scaling:neck.dphi"].expected == 1.0
    assert c["neck-scaling:neck.sup_Q_annulus"].expected == -2.0
    assert c["neck-scaling:neck.weighted_Q_minus_nu"].expected == 2.5
    assert reports[0].config["b_list"] == [1 / 32, 1 / 64, 1 / 128, 1 / 256]


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["verify-examples", "--bogus"],
    ["verify-green", "--n", "3"],
    ["neck-scaling", "--b-list", "1/32"],
    ["neck-scaling", "--b-list", "1/2,1/4"],
    ["solve", "--tol", "-1"],
    [],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_module_entry_point_exit_codes():
    ok = subprocess.run([sys.executable, "-m", "qcurv", "verify-examples"], capture_output=True, text=True)
    assert ok.returncode == 0 and "PASS" in ok.stderr
    bad = subprocess.run([sys.executable, "-m", "qcurv", "nope"], capture_output=True, text=True)
    assert bad.returncode == 2


def test_failing_check_exits_1(monkeypatch):
    def broken(n=6, seed=0):
        rep = cli.RunReport("verify-examples")
        rep.add("x", "forced failure", 1, 0, 0, False)
        return rep

    monkeypatch.setattr(cli, "suite_examples", broken)
    assert cli.main(["verify-examples"]) == 1


def test_plain_values():
    from fractions import Fraction

    import numpy as np

    assert cli._plain(Fraction(-3, 4)) == "-3/4"
    assert cli._plain(Fraction(6)) == "6"
    assert cli._plain(np.float64(0.5)) == 0.5
    assert cli._plain(float("nan")) == "nan"
    assert cli._plain({"a": (np.int64(2), True)}) == {"a": [2, True]}
