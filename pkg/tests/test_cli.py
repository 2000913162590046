import json
import os
import subprocess
import sys

import numpy as np
import pytest

MODELS = os.path.join(os.path.dirname(__file__), "..", "models")


def run_cli(*argv, expect: int = 0):
    proc = subprocess.run([sys.executable, "-m", "qmcbounds.cli", *argv],
                          capture_output=True, text=True)
    assert proc.returncode == expect, proc.stderr or proc.stdout
    return proc


def model(name: str) -> str:
    return os.path.join(MODELS, name)


class TestAnalyze:
    def test_ring_diagnostics(self):
        proc = run_cli("analyze", "--model", model("ring.json"))
        report = json.loads(proc.stdout)
        diag = report["diagnostics"]
        assert diag["irreducible"] is True
        assert diag["psi_irreducible"] is True
        assert diag["epsilon_multiplicative"] == pytest.approx(0.75, abs=1e-10)
        assert np.allclose(diag["invariant_state_diagonal"], [1 / 3] * 3)

    def test_two_block_lists_blocks(self):
        proc = run_cli("analyze", "--model", model("two_block_ring.json"))
        report = json.loads(proc.stdout)
        diag = report["diagnostics"]
        assert diag["irreducible"] is False
        assert diag["fixed_space_dimension"] == 2
        assert diag["blocks"] == 2

    def test_gkls_diagnostics(self):
        proc = run_cli("analyze", "--model", model("driven_qubit.json"))
        diag = json.loads(proc.stdout)["diagnostics"]
        assert diag["counting_constants"]["m"] == pytest.approx(2 / 9, abs=1e-10)
        assert diag["additive_irreducible"] is True

    def test_parse_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "kind": "kraus", "labels": ["a"],
            "kraus": [[[[0, 0], [1, 0]], [[1, 0]]]],
        }))
        proc = run_cli("analyze", "--model", str(bad), expect=2)
        assert "$.kraus[0][1]" in proc.stderr

    def test_missing_field_path(self, tmp_path):
        bad = tmp_path / "bad2.json"
        bad.write_text(json.dumps({"kind": "kraus", "labels": ["a"]}))
        proc = run_cli("analyze", "--model", str(bad), expect=2)
        assert "$.kraus" in proc.stderr

    def test_hypothesis_failure_partial_diagnostics(self, tmp_path):
        # pure dephasing has a degenerate steady state: exit 3, but the
        # report with partial diagnostics is still emitted
        dephasing = tmp_path / "dephasing.json"
        dephasing.write_text(json.dumps({
            "kind": "gkls",
            "hamiltonian": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]],
            "jumps": [[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]],
            "labels": ["z"],
        }))
        proc = run_cli("analyze", "--model", str(dephasing), expect=3)
        report = json.loads(proc.stdout)
        assert "hypothesis_failure" in report["diagnostics"]
        assert report["diagnostics"]["generator_unitality_residual"] < 1e-12


class TestBound:
    def test_bernstein_grid(self):
        proc = run_cli("bound", "--model", model("ring.json"), "--flavor",
                       "bernstein", "--n", "100,1000,10000",
                       "--gamma", "0.05,0.1,0.2")
        report = json.loads(proc.stdout)
        rows = report["rows"]
        assert len(rows) == 9
        by_gamma = {}
        for row in rows:
            by_gamma.setdefault(row["gamma"], []).append(row["bound"])
        for bounds in by_gamma.values():
            assert all(b <= a + 1e-15 for a, b in zip(bounds, bounds[1:]))
        assert report["constants"]["epsilon"] == pytest.approx(0.75, abs=1e-10)

    def test_hoeffding_all_out_of_regime(self):
        proc = run_cli("bound", "--model", model("ring.json"), "--flavor",
                       "hoeffding", "--n", "2,3", "--gamma", "0.01")
        rows = json.loads(proc.stdout)["rows"]
        assert all(row["valid"] is False for row in rows)
        assert all(row["reason"] == "outside regime" for row in rows)

    def test_counting_constants_echoed(self):
        proc = run_cli("bound", "--model", model("driven_qubit.json"), "--flavor",
                       "counting", "--t", "50,100", "--gamma", "0.1")
        report = json.loads(proc.stdout)
        constants = report["constants"]
        for key in ("m", "epsilon", "alpha", "b"):
            assert key in constants
        assert len(report["rows"]) == 2

    def test_flux_rows(self):
        proc = run_cli("bound", "--model", model("two_state_chain.json"),
                       "--flavor", "flux", "--n", "8", "--gamma", "0.3",
                       "--format", "csv")
        lines = proc.stdout.strip().splitlines()
        assert lines[0].startswith("flavor,horizon,gamma")
        assert len(lines) == 3  # header + bernstein + hoeffding

    def test_tdm_and_multitime_and_reducible_and_ci(self):
        proc = run_cli("bound", "--model", model("ring_tdm.json"), "--flavor",
                       "tdm-bernstein", "--n", "8", "--gamma", "0.4")
        assert json.loads(proc.stdout)["rows"][0]["valid"] is True
        proc = run_cli("bound", "--model", model("ring_tdm.json"), "--flavor",
                       "tdm-hoeffding", "--n", "16", "--gamma", "0.5")
        assert json.loads(proc.stdout)["rows"]
        proc = run_cli("bound", "--model", model("ring_tdm.json"), "--flavor",
                       "multitime", "--n", "32", "--gamma", "0.45")
        assert json.loads(proc.stdout)["rows"][0]["valid"] is True
        proc = run_cli("bound", "--model", model("two_block_ring.json"),
                       "--flavor", "reducible", "--n", "10", "--gamma", "0.4",
                       "--rho0", "maximally-mixed")
        rows = json.loads(proc.stdout)["rows"]
        assert {row["flavor"] for row in rows} == {"reducible-bernstein",
                                                   "reducible-hoeffding"}
        proc = run_cli("bound", "--model", model("ring_tdm.json"), "--flavor",
                       "ci", "--n", "1000", "--gamma", "0.1")
        rows = json.loads(proc.stdout)["rows"]
        assert len(rows) == 3  # one per parameter in the grid
        assert all(0.0 <= row["bound"] <= 1.0 for row in rows)

    def test_usage_error_exit_1(self):
        run_cli("bound", "--model", model("ring.json"), "--flavor", "bernstein",
                "--gamma", "0.1", expect=1)  # missing --n


class TestSimulate:
    def test_zero_trials_usage_error(self):
        run_cli("simulate", "--model", model("ring.json"), "--n", "5",
                "--trials", "0", "--seed", "1", expect=1)

    def test_byte_identical_reports(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["simulate", "--model", model("ring.json"), "--n", "10",
                "--gamma", "0.2,0.4", "--trials", "500", "--seed", "7"]
        run_cli(*args, "--output", str(out1))
        run_cli(*args, "--output", str(out2))
        assert out1.read_bytes() == out2.read_bytes()

    def test_dump_lines(self, tmp_path):
        dump = tmp_path / "records.jsonl"
        run_cli("simulate", "--model", model("ring.json"), "--n", "6",
                "--trials", "10", "--seed", "3", "--dump", str(dump))
        lines = dump.read_text().strip().splitlines()
        assert len(lines) == 10
        first = json.loads(lines[0])
        assert first["seed"] == 3 and len(first["outcomes"]) == 6

    def test_counting_rate_report(self):
        proc = run_cli("simulate", "--model", model("driven_qubit.json"),
                       "--t", "50", "--trials", "400", "--seed", "2",
                       "--gamma", "0.1")
        report = json.loads(proc.stdout)
        m = report["stationary_intensity"]
        rate = report["empirical_rate"]
        se = report["empirical_rate_stderr"]
        assert abs(rate - m) < 4 * se + 1e-3
        assert report["rows"][0]["tail_kind"] == "mc"


class TestVerify:
    def test_ring_bernstein_passes(self):
        proc = run_cli("verify", "--model", model("ring.json"), "--flavor",
                       "bernstein", "--n", "4,8,14", "--gamma", "0.2,0.5,0.8")
        report = json.loads(proc.stdout)
        assert report["summary"]["overall"] == "pass"
        assert all(row["verdict"] is True for row in report["rows"])
        assert all(row["tail_kind"] == "dp" for row in report["rows"])

    def test_corrupted_epsilon_detected(self):
        proc = run_cli("verify", "--model", model("ring.json"), "--flavor",
                       "bernstein", "--n", "8,14", "--gamma", "0.2,0.4",
                       "--override-epsilon", "60.0")
        report = json.loads(proc.stdout)
        assert report["summary"]["overall"] == "fail"
        assert any(row["verdict"] is False for row in report["rows"])

    def test_flux_verify(self):
        proc = run_cli("verify", "--model", model("two_state_chain.json"),
                       "--flavor", "flux", "--n", "6,12", "--gamma", "0.2,0.6")
        report = json.loads(proc.stdout)
        assert report["summary"]["overall"] == "pass"

    def test_counting_verify_mc(self):
        proc = run_cli("verify", "--model", model("driven_qubit.json"),
                       "--flavor", "counting", "--t", "30", "--gamma", "0.1,0.2",
                       "--trials", "400", "--seed", "5")
        report = json.loads(proc.stdout)
        assert report["summary"]["overall"] == "pass"
        assert all(row["ci_high"] is not None for row in report["rows"])

    def test_infeasible_without_mc(self, tmp_path):
        # an observation value that defeats the rational lattice makes the
        # exact tail infeasible; without --mc this is exit 5
        doc = json.loads(open(model("ring.json")).read())
        doc["observation"]["0+"] = 0.123456789012345
        bad = tmp_path / "crooked.json"
        bad.write_text(json.dumps(doc))
        run_cli("verify", "--model", str(bad), "--flavor", "bernstein",
                "--n", "40", "--gamma", "0.2", expect=5)

    def test_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["verify", "--model", model("driven_qubit.json"), "--flavor",
                "counting", "--t", "20", "--gamma", "0.15", "--trials", "200",
                "--seed", "9"]
        run_cli(*args, "--output", str(out1))
        run_cli(*args, "--output", str(out2))
        assert out1.read_bytes() == out2.read_bytes()
