import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from arsonproof.cli import main, run_suite
from arsonproof.io import atomic_write

SCENARIO = {
    "W0": 10.0,
    "rho": 0.0,
    "beta": 0.0,
    "utility": {"type": "CRRA", "params": {"gamma": 2.0}},
    "loss": {"M": 4.0, "p0": 0.5, "density": {"type": "Uniform"}},
    "cost": {"type": "Zero"},
}


def scenario(**over):
    out = json.loads(json.dumps(SCENARIO))
    out.update(over)
    return out


def write_file(tmp_path, contract=None, name="scn.json", **over):
    doc = {"schema_version": 1, "scenario": scenario(**over)}
    if contract is not None:
        doc["contract"] = contract
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], np.array(rows[1:], dtype=float)
    return {h: body[:, i] for i, h in enumerate(header)}


CR = {"type": "ConstantRetention", "params": {"t": 2.0, "j": 1.0}}
SD = {"type": "StraightDeductible", "params": {"d": 2.0}}
DD = {"type": "DisappearingDeductible", "params": {"d": 2.0}}


class TestEnvelope:
    def test_retention(self, tmp_path):
        out = tmp_path / "env.csv"
        assert main(["envelope", "--scenario", write_file(tmp_path, CR), "--out", str(out)]) == 0
        t = read_csv(out)
        assert list(t) == ["x", "Y", "V", "z_star", "payoff"]
        assert len(t["x"]) == 2001
        np.testing.assert_allclose(t["V"], np.maximum(0.0, t["x"] - 1.0), atol=1e-11)

    def test_deductible(self, tmp_path):
        out = tmp_path / "env.csv"
        main(["envelope", "--scenario", write_file(tmp_path, SD), "--out", str(out), "--grid-n", "101"])
        t = read_csv(out)
        assert len(t["x"]) == 101
        np.testing.assert_array_equal(t["V"], t["Y"])

    def test_disappearing(self, tmp_path):
        out = tmp_path / "env.csv"
        main(["envelope", "--scenario", write_file(tmp_path, DD), "--out", str(out)])
        t = read_csv(out)
        np.testing.assert_allclose(t["V"], t["x"], atol=1e-11)

    def test_explicit_segments(self, tmp_path):
        contract = {"domain_max": 4.0, "segments": [
            {"x_start": 0.0, "x_end": 1.0, "intercept": 0.0, "slope": 0.0},
            {"x_start": 1.0, "x_end": 4.0, "intercept": 0.0, "slope": 0.5},
        ]}
        out = tmp_path / "env.csv"
        assert main(["envelope", "--scenario", write_file(tmp_path, contract), "--out", str(out)]) == 0

    def test_stdout_and_determinism(self, tmp_path, capsys):
        path = write_file(tmp_path, CR)
        main(["envelope", "--scenario", path, "--grid-n", "41"])
        first = capsys.readouterr().out
        main(["envelope", "--scenario", path, "--grid-n", "41"])
        assert capsys.readouterr().out == first
        assert first.splitlines()[0] == "x,Y,V,z_star,payoff"


class TestPriceAndCompare:
    def test_price(self, tmp_path, capsys):
        out = tmp_path / "price.json"
        assert main(["price", "--scenario", write_file(tmp_path, CR), "--out", str(out)]) == 0
        rep = json.loads(out.read_text())
        assert rep["premium_without_manipulation"] == pytest.approx(0.5)
        assert rep["premium_with_manipulation"] == pytest.approx(0.625)
        assert rep["manipulation_proof"] is False
        assert "premium (manipulated) 0.625" in capsys.readouterr().out

    def test_compare(self, tmp_path, capsys):
        out = tmp_path / "cmp.json"
        assert main(["compare", "--scenario", write_file(tmp_path, DD), "--out", str(out)]) == 0
        assert "strictly dominated: True" in capsys.readouterr().out
        rep = json.loads(out.read_text())
        assert rep["envelope"]["premium"] == pytest.approx(1.0)


class TestSolve:
    def test_deductible(self, tmp_path, capsys):
        out = tmp_path / "sol.json"
        assert main(["solve", "--scenario", write_file(tmp_path), "--family", "deductible", "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["family_params"]["params"]["d"] <= 4e-4
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split()[:2] == ["family", "params"] and lines[1].startswith("deductible")

    def test_retention_with_fixed_cost(self, tmp_path, capsys):
        out, trace = tmp_path / "sol.json", tmp_path / "trace.csv"
        path = write_file(tmp_path, cost={"type": "FixedPerClaim", "params": {"c0": 0.05}})
        assert main(["solve", "--scenario", path, "--family", "retention", "--out", str(out), "--trace", str(trace)]) == 0
        p = json.loads(out.read_text())["family_params"]["params"]
        assert p["t"] > p["j"]
        assert trace.read_text().splitlines()[0] == "iteration,params,eu,premium"

    def test_pwl_matches_deductible(self, tmp_path, capsys):
        path = write_file(tmp_path, cost={"type": "FixedPerClaim", "params": {"c0": 0.1}})
        a, b = tmp_path / "pwl.json", tmp_path / "ded.json"
        main(["solve", "--scenario", path, "--family", "pwl", "--knots", "3", "--out", str(a)])
        main(["solve", "--scenario", path, "--family", "deductible", "--out", str(b)])
        pwl, ded = json.loads(a.read_text()), json.loads(b.read_text())
        assert pwl["expected_utility"] == pytest.approx(ded["expected_utility"], abs=1e-6)
        assert pwl["contract"]["segments"][-1]["slope"] == pytest.approx(1.0)

    def test_unknown_family(self, tmp_path, capsys):
        assert main(["solve", "--scenario", write_file(tmp_path), "--family", "bogus"]) == 2
        assert "unknown family" in capsys.readouterr().err


def suite_file(tmp_path, checks):
    path = tmp_path / "suite.json"
    path.write_text(json.dumps({"schema_version": 1, "checks": checks}))
    return str(path)


class TestVerify:
    def test_negative_control_fails(self, tmp_path, capsys):
        checks = [{
            "claim": "retention_jump",
            "scenario": scenario(cost={"type": "FixedPerClaim", "params": {"c0": 0.05}}),
            "expect": {"jump": False},
        }]
        out = tmp_path / "rep.json"
        assert main(["verify", "--scenario", suite_file(tmp_path, checks), "--out", str(out)]) == 1
        rep = json.loads(out.read_text())
        assert rep["checks"][0]["status"] == "FAIL" and rep["summary"]["failed"] == 1
        assert "FAIL [0] retention_jump" in capsys.readouterr().out

    def test_empty_suite(self, tmp_path, capsys):
        out = tmp_path / "rep.json"
        assert main(["verify", "--scenario", suite_file(tmp_path, []), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["summary"] == {"total": 0, "passed": 0, "failed": 0}

    def test_scenario_file_runs_battery(self, tmp_path, capsys):
        assert main(["verify", "--scenario", write_file(tmp_path, CR)]) == 0
        assert capsys.readouterr().out.count("PASS") == 4

    def test_report_order_follows_index(self):
        checks = [
            {"claim": "disappearing_reverts", "scenario": scenario(), "params": {"d": 1.0}},
            {"claim": "binding_participation", "scenario": scenario(), "contract": SD},
        ]
        rep = run_suite(checks)
        assert [c["index"] for c in rep["checks"]] == [0, 1]
        assert [c["claim"] for c in rep["checks"]] == ["disappearing_reverts", "binding_participation"]

    def test_unknown_claim(self, tmp_path, capsys):
        path = suite_file(tmp_path, [{"claim": "nope", "scenario": scenario()}])
        assert main(["verify", "--scenario", path]) == 2


class TestExitCodes:
    def test_missing_scenario(self, capsys):
        assert main(["envelope"]) == 2

    def test_bad_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["price", "--scenario", str(path)]) == 2

    def test_unknown_key(self, tmp_path, capsys):
        assert main(["price", "--scenario", write_file(tmp_path, CR, colour="red")]) == 2
        assert "colour" in capsys.readouterr().err

    def test_wrong_schema_version(self, tmp_path, capsys):
        path = tmp_path / "v.json"
        path.write_text(json.dumps({"schema_version": 2, "scenario": SCENARIO, "contract": CR}))
        assert main(["price", "--scenario", str(path)]) == 2

    def test_contract_missing(self, tmp_path, capsys):
        assert main(["envelope", "--scenario", write_file(tmp_path)]) == 2

    def test_invalid_parameter_value(self, tmp_path, capsys):
        bad = {"type": "ConstantRetention", "params": {"t": 1.0, "j": 2.0}}
        out = tmp_path / "never.csv"
        assert main(["envelope", "--scenario", write_file(tmp_path, bad), "--out", str(out)]) == 3
        assert not out.exists()
        assert "error:" in capsys.readouterr().err

    def test_wealth_guard(self, tmp_path, capsys):
        assert main(["solve", "--scenario", write_file(tmp_path, W0=5.0)]) == 3
        assert "W0" in capsys.readouterr().err


class TestAtomicWrite:
    def test_replaces_and_leaves_no_temp(self, tmp_path):
        target = tmp_path / "f.txt"
        target.write_text("old")
        atomic_write(str(target), "new")
        assert target.read_text() == "new"
        assert os.listdir(tmp_path) == ["f.txt"]

    def test_failure_keeps_old_file(self, tmp_path):
        target = tmp_path / "f.txt"
        target.write_text("old")
        with pytest.raises(TypeError):
            atomic_write(str(target), 123)
        assert target.read_text() == "old"
        assert os.listdir(tmp_path) == ["f.txt"]


def test_module_entry_point(tmp_path):
    path = suite_file(tmp_path, [{"claim": "binding_participation", "scenario": scenario(), "contract": SD}])
    proc = subprocess.run(
        [sys.executable, "-m", "arsonproof", "verify", "--scenario", path], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "1/1 checks passed" in proc.stdout
