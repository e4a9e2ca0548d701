"""End-to-end tests for the command-line interface.

Everything runs in-process through ``frasian.cli.main`` (fast, and lets
monkeypatch reach the environment and internals); one subprocess test at
the bottom exercises the installed console script for real.
"""

import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import frasian.cli as cli
from frasian.cli import main
from frasian.multitest import WeightSolverError

SCHEMA_PATH = Path(__file__).resolve().parents[1] / "docs" / "report.schema.json"


@pytest.fixture(scope="module")
def schema():
    return json.loads(SCHEMA_PATH.read_text())


def validate_report(path: Path, schema) -> dict:
    jsonschema = pytest.importorskip("jsonschema")
    payload = json.loads(path.read_text(encoding="utf-8"))
    jsonschema.validate(payload, schema)
    return payload


@pytest.fixture()
def data_csv(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("y\r\n0.5\r\n-0.3\r\n1.1\r\n0.2\r\n", encoding="utf-8")
    return path


@pytest.fixture()
def pvalue_csv(tmp_path):
    path = tmp_path / "pvalues.csv"
    path.write_text("pvalue\r\n0.04\r\n0.004\r\n", encoding="utf-8")
    return path


@pytest.fixture()
def theta_csv(tmp_path):
    path = tmp_path / "theta.csv"
    path.write_text("theta\r\n1.0\r\n2.0\r\n", encoding="utf-8")
    return path


@pytest.fixture()
def weight_csv(tmp_path):
    path = tmp_path / "weights.csv"
    path.write_text("weight\r\n0.9\r\n0.1\r\n", encoding="utf-8")
    return path


def read_csv_rows(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as handle:
        return list(csv.DictReader(handle))


class TestPredict:
    def test_inline_sample_writes_report_and_curve(self, tmp_path, schema):
        out = tmp_path / "out"
        assert main(["predict", "--sample", "0.5,-0.3", "--out", str(out)]) == 0
        report = validate_report(out / "predict_report.json", schema)
        assert report["n"] == 2
        assert report["config"]["subcommand"] == "predict"
        assert report["frequentized"]["method"] == "frequentized"
        assert report["bayes"]["method"] == "bayes"
        assert (out / "predict_curve.csv").exists()

    def test_curve_csv_contract(self, tmp_path, data_csv):
        out = tmp_path / "out"
        assert main(["predict", "--data", str(data_csv), "--out", str(out)]) == 0
        raw = (out / "predict_curve.csv").read_bytes()
        assert b"\r\n" in raw  # RFC 4180 line endings
        rows = read_csv_rows(out / "predict_curve.csv")
        assert list(rows[0]) == ["z", "pvalue", "in_region"]
        for row in rows:
            p = float(row["pvalue"])
            assert 0.0 <= p <= 1.0
            assert row["in_region"] in ("0", "1")
            assert (row["in_region"] == "1") == (p >= 0.05)

    def test_data_and_sample_are_exclusive(self, tmp_path, data_csv, capsys):
        out = str(tmp_path / "out")
        assert main(["predict", "--data", str(data_csv), "--sample", "1.0", "--out", out]) == 2
        assert main(["predict", "--out", out]) == 2
        assert "exactly one of" in capsys.readouterr().err

    def test_grid_flags_all_or_nothing(self, tmp_path):
        out = str(tmp_path / "out")
        code = main(["predict", "--sample", "0.1,0.2", "--grid-lo", "-5", "--out", out])
        assert code == 2

    def test_explicit_grid_is_echoed(self, tmp_path, schema):
        out = tmp_path / "out"
        code = main(
            [
                "predict", "--sample", "0.1,0.2", "--out", str(out),
                "--grid-lo", "-4", "--grid-hi", "4", "--grid-step", "0.01",
            ]
        )
        assert code == 0
        report = validate_report(out / "predict_report.json", schema)
        assert report["config"]["grid"] == {"lo": -4.0, "hi": 4.0, "step": 0.01}

    def test_sample_points_always_in_region(self, tmp_path):
        # The conformal p-value at an observed point is at least 1/(n+1),
        # so with alpha below that the observations sit inside the region.
        out = tmp_path / "out"
        main(["predict", "--sample", "0.5,-0.3,1.1", "--alpha", "0.2", "--out", str(out)])
        rows = read_csv_rows(out / "predict_curve.csv")
        by_z = {float(r["z"]): r for r in rows}
        for y in (0.5, -0.3, 1.1):
            assert by_z[y]["in_region"] == "1"

    def test_invalid_alpha_is_a_usage_error(self, tmp_path):
        assert main(["predict", "--sample", "0.1", "--alpha", "2.0",
                     "--out", str(tmp_path)]) == 2

    def test_rerun_is_byte_identical(self, tmp_path, data_csv):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["predict", "--data", str(data_csv), "--seed", "11"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        json_a = (a / "predict_report.json").read_bytes()
        json_b = (b / "predict_report.json").read_bytes()
        # The out directory is echoed in the config, so compare after
        # normalizing that one field.
        assert json_a.replace(str(a).encode(), b"X") == json_b.replace(str(b).encode(), b"X")
        assert (a / "predict_curve.csv").read_bytes() == (b / "predict_curve.csv").read_bytes()


class TestBands:
    def test_dkw_band_csv_contract(self, tmp_path, data_csv, schema):
        out = tmp_path / "out"
        assert main(["bands", "--data", str(data_csv), "--out", str(out)]) == 0
        report = validate_report(out / "bands_report.json", schema)
        assert report["method"] == "dkw"
        assert "epsilon" in report["metadata"]
        rows = read_csv_rows(out / "band.csv")
        assert list(rows[0]) == ["x", "lower", "ecdf_or_mean", "upper"]
        for row in rows:
            lo, mid, hi = (float(row[k]) for k in ("lower", "ecdf_or_mean", "upper"))
            assert 0.0 <= lo <= mid <= hi <= 1.0
        xs = [float(r["x"]) for r in rows]
        assert xs == sorted(xs)

    def test_dp_band_requires_beta(self, tmp_path, data_csv, capsys):
        code = main(["bands", "--data", str(data_csv), "--method", "dp",
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "--beta" in capsys.readouterr().err

    def test_dp_band_runs_and_validates(self, tmp_path, data_csv, schema):
        out = tmp_path / "out"
        code = main(
            [
                "bands", "--data", str(data_csv), "--method", "dp", "--beta", "2.0",
                "--draws", "50", "--truncation", "100", "--seed", "3", "--out", str(out),
            ]
        )
        assert code == 0
        report = validate_report(out / "bands_report.json", schema)
        assert report["method"] == "dp"
        assert report["config"]["beta"] == 2.0
        assert report["metadata"]["radius"] > 0.0

    def test_dp_rerun_is_byte_identical(self, tmp_path, data_csv):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = [
            "bands", "--data", str(data_csv), "--method", "dp", "--beta", "2.0",
            "--draws", "50", "--truncation", "100", "--seed", "3",
        ]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert (a / "band.csv").read_bytes() == (b / "band.csv").read_bytes()

    def test_missing_file_is_a_usage_error(self, tmp_path, capsys):
        code = main(["bands", "--data", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "out")])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_wrong_header_is_a_usage_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("value\r\n0.5\r\n", encoding="utf-8")
        assert main(["bands", "--data", str(bad), "--out", str(tmp_path / "out")]) == 2
        assert "'y' column" in capsys.readouterr().err

    def test_non_numeric_cell_reports_line_number(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("y\r\n0.5\r\noops\r\n", encoding="utf-8")
        assert main(["bands", "--data", str(bad), "--out", str(tmp_path / "out")]) == 2
        assert "line 3" in capsys.readouterr().err


class TestMtest:
    def test_uniform_default(self, tmp_path, pvalue_csv, schema):
        out = tmp_path / "out"
        assert main(["mtest", "--pvalues", str(pvalue_csv), "--out", str(out)]) == 0
        report = validate_report(out / "mtest_report.json", schema)
        assert report["weight_source"] == "uniform"
        assert report["c"] is None
        assert report["rejections"]["indices"] == [2]

    def test_supplied_weights(self, tmp_path, pvalue_csv, weight_csv, schema):
        out = tmp_path / "out"
        code = main(["mtest", "--pvalues", str(pvalue_csv), "--weights", str(weight_csv),
                     "--out", str(out)])
        assert code == 0
        report = validate_report(out / "mtest_report.json", schema)
        assert report["weight_source"] == "supplied"
        assert report["rejections"]["indices"] == [1, 2]

    def test_means_solve_optimal_weights(self, tmp_path, pvalue_csv, theta_csv, schema):
        out = tmp_path / "out"
        code = main(["mtest", "--pvalues", str(pvalue_csv), "--means", str(theta_csv),
                     "--out", str(out)])
        assert code == 0
        report = validate_report(out / "mtest_report.json", schema)
        assert report["weight_source"] == "optimal"
        assert report["c"] == pytest.approx(2.0958901999498406, abs=1e-9)
        assert sum(report["weights"]) == pytest.approx(1.0, abs=1e-10)

    def test_weights_and_means_are_exclusive(self, tmp_path, pvalue_csv, theta_csv,
                                             weight_csv, capsys):
        code = main(
            ["mtest", "--pvalues", str(pvalue_csv), "--weights", str(weight_csv),
             "--means", str(theta_csv), "--out", str(tmp_path / "out")]
        )
        assert code == 2
        assert "not both" in capsys.readouterr().err

    def test_solver_failure_maps_to_exit_3(self, tmp_path, pvalue_csv, theta_csv,
                                           monkeypatch, capsys):
        def explode(means, alpha):
            raise WeightSolverError("solver blew up", residual=1.0)

        monkeypatch.setattr(cli, "optimal_weights", explode)
        code = main(["mtest", "--pvalues", str(pvalue_csv), "--means", str(theta_csv),
                     "--out", str(tmp_path / "out")])
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err


class TestSimulate:
    def test_fwer_preset(self, tmp_path, schema):
        out = tmp_path / "out"
        code = main(["simulate", "--preset", "fwer", "--reps", "1000",
                     "--seed", "2", "--out", str(out)])
        assert code == 0
        report = validate_report(out / "simulate_report.json", schema)
        assert report["preset"] == "fwer"
        assert report["config"]["m"] == 100
        assert 0.0 <= report["estimates"]["fwer"] <= 0.1

    def test_fig1_preset_writes_panels(self, tmp_path, schema):
        out = tmp_path / "out"
        code = main(["simulate", "--preset", "fig1", "--reps", "10",
                     "--seed", "4", "--out", str(out)])
        assert code == 0
        report = validate_report(out / "simulate_report.json", schema)
        assert report["artifacts"]["panels_csv"] == "fig1_panels.csv"
        rows = read_csv_rows(out / "fig1_panels.csv")
        assert list(rows[0]) == ["theta", "kind", "index", "lo", "hi"]
        kinds = {row["kind"] for row in rows}
        assert kinds == {"data", "frequentized", "bayes"}

    def test_conformal_coverage_preset(self, tmp_path, schema):
        out = tmp_path / "out"
        code = main(["simulate", "--preset", "conformal-coverage", "--reps", "100",
                     "--seed", "5", "--out", str(out)])
        assert code == 0
        report = validate_report(out / "simulate_report.json", schema)
        for key in ("coverage_theta0", "coverage_theta5",
                    "coverage_exclusive_theta0", "coverage_exclusive_theta5"):
            assert key in report["estimates"]

    def test_dp_coverage_preset(self, tmp_path, schema):
        out = tmp_path / "out"
        code = main(
            ["simulate", "--preset", "dp-coverage", "--reps", "2", "--draws", "40",
             "--truncation", "100", "--seed", "6", "--out", str(out)]
        )
        assert code == 0
        report = validate_report(out / "simulate_report.json", schema)
        assert report["config"]["beta"] == 10.0
        assert {"coverage", "content"} <= set(report["estimates"])

    def test_unknown_preset_is_a_usage_error(self, tmp_path, capsys):
        assert main(["simulate", "--preset", "nope", "--out", str(tmp_path)]) == 2

    def test_nonpositive_reps_rejected(self, tmp_path):
        assert main(["simulate", "--preset", "fig1", "--reps", "0",
                     "--out", str(tmp_path)]) == 2

    def test_fwer_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["simulate", "--preset", "fwer", "--reps", "1000", "--seed", "2"]
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        ja = (a / "simulate_report.json").read_bytes()
        jb = (b / "simulate_report.json").read_bytes()
        assert ja.replace(str(a).encode(), b"X") == jb.replace(str(b).encode(), b"X")


class TestSeedAndOutResolution:
    def test_seed_env_fallback(self, tmp_path, monkeypatch, schema):
        monkeypatch.setenv("FRASIAN_SEED", "7")
        out = tmp_path / "out"
        assert main(["predict", "--sample", "0.1,0.2", "--out", str(out)]) == 0
        report = validate_report(out / "predict_report.json", schema)
        assert report["seed"]["master"] == 7

    def test_seed_flag_beats_env(self, tmp_path, monkeypatch, schema):
        monkeypatch.setenv("FRASIAN_SEED", "7")
        out = tmp_path / "out"
        assert main(["predict", "--sample", "0.1,0.2", "--seed", "9", "--out", str(out)]) == 0
        report = validate_report(out / "predict_report.json", schema)
        assert report["seed"]["master"] == 9

    def test_bad_seed_env_is_a_usage_error(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("FRASIAN_SEED", "not-a-number")
        assert main(["predict", "--sample", "0.1", "--out", str(tmp_path)]) == 2
        assert "FRASIAN_SEED" in capsys.readouterr().err

    def test_out_env_fallback(self, tmp_path, monkeypatch):
        target = tmp_path / "from-env"
        monkeypatch.setenv("FRASIAN_OUT_DIR", str(target))
        assert main(["predict", "--sample", "0.1,0.2"]) == 0
        assert (target / "predict_report.json").exists()

    def test_out_flag_beats_env(self, tmp_path, monkeypatch):
        env_dir = tmp_path / "from-env"
        flag_dir = tmp_path / "from-flag"
        monkeypatch.setenv("FRASIAN_OUT_DIR", str(env_dir))
        assert main(["predict", "--sample", "0.1,0.2", "--out", str(flag_dir)]) == 0
        assert (flag_dir / "predict_report.json").exists()
        assert not env_dir.exists()

    def test_default_seed_is_zero(self, tmp_path, monkeypatch, schema):
        monkeypatch.delenv("FRASIAN_SEED", raising=False)
        out = tmp_path / "out"
        assert main(["predict", "--sample", "0.1", "--out", str(out)]) == 0
        report = validate_report(out / "predict_report.json", schema)
        assert report["seed"] == {"master": 0, "path": []}


class TestTopLevel:
    def test_help_exits_zero(self):
        assert main(["--help"]) == 0
        assert main(["predict", "--help"]) == 0

    def test_no_subcommand_is_a_usage_error(self):
        assert main([]) == 2

    def test_console_script_subprocess(self, tmp_path):
        out = tmp_path / "out"
        proc = subprocess.run(
            [sys.executable, "-m", "frasian", "predict", "--sample", "0.4,-0.2",
             "--out", str(out)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert (out / "predict_report.json").exists()
        assert "wrote" in proc.stdout
