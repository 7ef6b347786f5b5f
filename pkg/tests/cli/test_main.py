import json
from pathlib import Path

import pandas as pd
import pytest

from diffusion_el.cli import commands
from diffusion_el.cli.main import COMMANDS, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, build_parser, main
from diffusion_el.cli.report import TestReport
from diffusion_el.models.zoo import MODEL_PRESETS
from diffusion_el.utils.errors import EstimationError


def test_parser_flags():
    args = build_parser().parse_args(["test", "--n-boot", "99", "--set", "alpha=0.1", "--no-asymptotic"])
    assert args.command == "test"
    assert args.n_boot == 99
    assert args.set == ["alpha=0.1"]
    assert args.asymptotic is False
    assert args.full_scale is None


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "diffusion-el" in capsys.readouterr().out


class TestSimulate:

    def test_reproducible(self, tmp_path: Path):
        arguments = ["simulate", "--model", "vasicek0", "-n", "50", "--seed", "3", "--output"]
        assert main(arguments + [str(tmp_path / "first.csv")]) == EXIT_OK
        assert main(arguments + [str(tmp_path / "second.csv")]) == EXIT_OK
        first = (tmp_path / "first.csv").read_text()
        assert first == (tmp_path / "second.csv").read_text()
        assert len(first.splitlines()) == 52

    def test_directory_output_and_x0(self, tmp_path: Path):
        arguments = ["simulate", "--model", "cir0", "-n", "20", "--x0", "0.07", "--output", str(tmp_path)]
        assert main(arguments) == EXIT_OK
        values = pd.read_csv(tmp_path / "path.csv")["value"]
        assert values.iloc[0] == 0.07
        assert (values > 0).all()

    def test_family_without_theta(self, tmp_path: Path):
        assert main(["simulate", "--model", "cev", "--output", str(tmp_path)]) == EXIT_VALIDATION


class TestFit:

    def test_fit_json(self, tmp_path: Path, series_file: Path):
        assert main(["fit", "--data", str(series_file), "--output", str(tmp_path)]) == EXIT_OK
        content = json.loads((tmp_path / "fit.json").read_text())
        assert content["method"] == "closed-form"
        assert set(content["theta_hat"]) == {"kappa", "alpha", "sigma2"}
        assert len(content["data_hash"]) == 64

    def test_numerical_failure(self, tmp_path: Path, series_file: Path, monkeypatch):
        def fail(config):
            raise EstimationError("the likelihood is flat")

        monkeypatch.setitem(COMMANDS, "fit", fail)
        assert main(["fit", "--data", str(series_file), "--output", str(tmp_path)]) == EXIT_NUMERICAL


class TestTestCommand:

    def test_reports(self, tmp_path: Path, series_file: Path, capsys):
        arguments = [
            "test",
            "--model", "vasicek",
            "--data", str(series_file),
            "--n-boot", "99",
            "--grid", "8,8",
            "--bandwidths", "0.02,0.025",
            "--region", "vasicek0",
            "--seed", "5",
            "--output", str(tmp_path),
        ]
        assert main(arguments) == EXIT_OK
        assert "Test statistic L_n" in capsys.readouterr().out
        report = TestReport.load(tmp_path / "test_report.json")
        assert report.B + report.failed_replicates == 99
        assert report.bandwidths == [0.02, 0.025]
        assert report.bandwidth_scheme == "fixed"
        assert report.grid == [8, 8]
        assert report.seed == 5
        assert len(report.per_h) == 2
        assert {"critical_value", "p_value", "reject", "asymptotic_critical_value"} <= set(report.per_h[0])
        assert {"beta", "max_critical_value", "reject_max"} <= set(report.asymptotic)
        assert report.reject == (report.L_n >= report.critical_value)
        for name in ("test_report.txt", "test_per_bandwidth.csv", "test_replicates.csv"):
            assert (tmp_path / name).exists()

    def test_reproducible_with_a_config_file(self, tmp_path: Path, series_file: Path):
        config_file = tmp_path / "run.yaml"
        config_file.write_text(
            f"model: vasicek\ndata: {series_file}\nn_boot: 99\ngrid: [8, 8]\nbandwidths: [0.02, 0.025]\n"
            "region: vasicek0\nasymptotic: false\n"
        )
        reports = []
        for name in ("first", "second"):
            output = tmp_path / name
            assert main(["test", "--config", str(config_file), "--output", str(output)]) == EXIT_OK
            reports.append(TestReport.load(output / "test_report.json"))
        assert reports[0].replicates == reports[1].replicates
        assert reports[0].asymptotic is None


class TestExitCodes:

    def test_missing_data_file(self, tmp_path: Path):
        assert main(["test", "--data", str(tmp_path / "missing.txt"), "--output", str(tmp_path)]) == EXIT_VALIDATION

    def test_missing_data_key(self, tmp_path: Path):
        assert main(["fit", "--output", str(tmp_path)]) == EXIT_VALIDATION

    def test_negative_series_for_cir(self, tmp_path: Path):
        data = tmp_path / "negative.txt"
        data.write_text("0.05\n0.02\n-0.01\n0.03\n")
        assert main(["fit", "--model", "cir", "--data", str(data), "--output", str(tmp_path)]) == EXIT_VALIDATION

    @pytest.mark.parametrize("assignment", ["alpha=2", "unknown_key=1", "grid=1x1"])
    def test_invalid_settings(self, tmp_path: Path, series_file: Path, assignment):
        arguments = ["fit", "--data", str(series_file), "--set", assignment, "--output", str(tmp_path)]
        assert main(arguments) == EXIT_VALIDATION

    def test_invalid_theta(self, tmp_path: Path):
        arguments = ["simulate", "--model", "vasicek", "--theta", "kappa=-1,alpha=0.09,sigma2=0.002"]
        assert main(arguments + ["--output", str(tmp_path)]) == EXIT_VALIDATION

    def test_unknown_study_preset(self, tmp_path: Path):
        assert main(["study", "--preset", "vasicek-table9", "--output", str(tmp_path)]) == EXIT_VALIDATION


def test_bandwidth_command(tmp_path: Path, series_file: Path):
    arguments = ["bandwidth", "--model", "vasicek0", "--data", str(series_file), "--grid", "5,5"]
    assert main(arguments + ["--output", str(tmp_path)]) == EXIT_OK
    content = json.loads((tmp_path / "bandwidths.json").read_text())
    assert content["scheme"] == "ref-third-smallest"
    assert content["bandwidths"]["values"][2] == pytest.approx(content["scott"])
    assert content["cv"] is None or content["cv"] > 0
    densities = pd.read_csv(tmp_path / "densities.csv")
    assert len(densities) == 6 * 25
    assert list(densities.columns) == ["h", "x", "y", "pi_hat", "p_hat", "p_tilde"]


@pytest.mark.slow
def test_study_command(tmp_path: Path, capsys):
    arguments = ["study", "--preset", "vasicek-table1", "--reps", "10", "--grid", "8,8", "--no-asymptotic"]
    assert main(arguments + ["--output", str(tmp_path)]) == EXIT_OK
    assert "size" in capsys.readouterr().out
    summary = json.loads((tmp_path / "vasicek-table1_summary.json").read_text())
    assert summary["n_reps"] == 10
    assert "wall_time" not in summary
    assert (tmp_path / "vasicek-table1_reps.csv").exists()
    assert (tmp_path / "vasicek-table1_table.txt").exists()


class _Recorded:
    """Stand-in study result holding the design it was run with."""

    def __init__(self, design):
        self.design = design

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"reject": [False]})

    def summary(self) -> dict:
        return {"name": self.design.name, "theta_truth": dict(self.design.theta_truth)}

    def format_table(self) -> str:
        return self.design.name


class TestStudyModel:

    @pytest.fixture
    def recorded(self, monkeypatch):
        monkeypatch.setattr(commands, "run_size_study", _Recorded)
        monkeypatch.setattr(commands, "run_power_study", _Recorded)

    def test_model_preset_sets_the_truth(self, tmp_path: Path, recorded):
        arguments = ["study", "--preset", "cir-table3", "--model", "cir2", "--reps", "10", "--output", str(tmp_path)]
        assert main(arguments) == EXIT_OK
        summary = json.loads((tmp_path / "cir-table3_summary.json").read_text())
        assert summary["theta_truth"] == MODEL_PRESETS["cir2"][1]

    def test_family_keeps_the_preset_truth(self, tmp_path: Path, recorded):
        assert main(["study", "--preset", "cir1-table3", "--model", "cir", "--output", str(tmp_path)]) == EXIT_OK
        summary = json.loads((tmp_path / "cir1-table3_summary.json").read_text())
        assert summary["theta_truth"] == MODEL_PRESETS["cir1"][1]

    def test_model_outside_the_null_family(self, tmp_path: Path, recorded):
        arguments = ["study", "--preset", "vasicek-table1", "--model", "cir1", "--output", str(tmp_path)]
        assert main(arguments) == EXIT_VALIDATION
