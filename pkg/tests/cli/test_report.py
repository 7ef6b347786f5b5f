import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from diffusion_el.cli.report import TestReport, dump_json, format_reports, write_outputs


def _report(model: str = "vasicek", L_n: float = 1.25) -> TestReport:  # noqa: N803
    return TestReport(
        model=model,
        n=100,
        delta=1 / 12,
        theta_hat={"kappa": np.float64(0.9), "alpha": 0.09, "sigma2": 0.002},
        loglik=321.5,
        converged=np.bool_(True),
        fit_method="closed-form",
        region={"u_min": 0.03, "u_max": 0.22, "v_min": -0.02, "v_max": 0.02},
        bandwidth_scheme="fixed",
        bandwidths=np.array([0.02, 0.025]),
        variant="lsel",
        mode="grid",
        grid=(8, 8),
        per_h=[
            {"h": 0.02, "N_h": 1.01, "standardized": 0.35, "hull_error_count": 0, "critical_value": np.nan,
             "p_value": np.nan, "reject": False},
            {"h": 0.025, "N_h": 1.02, "standardized": 0.56, "hull_error_count": 2, "critical_value": 1.5,
             "p_value": 0.4, "reject": False},
        ],
        L_n=L_n,
        critical_value=2.1,
        p_value=0.31,
        alpha=0.05,
        reject=False,
        B=98,
        requested_B=99,
        failed_replicates=1,
        redraws=3,
        nonconverged_fits=0,
        replicates=np.linspace(-1.0, 3.0, 98),
        seed=7,
        warnings=["1 bootstrap replicate(s) failed and were skipped"],
    )


class TestTestReport:

    def test_plain_values(self):
        report = _report()
        assert type(report.converged) is bool
        assert type(report.theta_hat["kappa"]) is float
        assert report.grid == [8, 8]
        assert report.per_h[0]["critical_value"] is None
        assert report.hull_errors == 2

    def test_json(self):
        report = _report()
        content = json.loads(report.to_json())
        assert content["per_h"][0]["p_value"] is None
        assert content["rng"] == "numpy.PCG64/SeedSequence"
        assert list(content) == sorted(content)
        assert TestReport.from_json(report.to_json()) == report

    def test_infinite_critical_value(self):
        report = replace(_report(), critical_value=float("-inf"), p_value=1.0)
        report.per_h[1]["critical_value"] = float("inf")
        text = report.to_json()
        assert "-Infinity\"" in text

        def reject(constant):
            raise ValueError(f"non-standard JSON constant {constant}")

        content = json.loads(text, parse_constant=reject)
        assert content["critical_value"] == "-Infinity"
        assert content["per_h"][1]["critical_value"] == "Infinity"
        restored = TestReport.from_json(text)
        assert restored.critical_value == float("-inf")
        assert restored.per_h[1]["critical_value"] == float("inf")
        assert restored == report

    def test_dump_json(self):
        text = dump_json({"a": np.nan, "b": [np.float64(1.5), -np.inf]})
        assert json.loads(text) == {"a": None, "b": [1.5, "-Infinity"]}

    def test_save_and_load(self, tmp_path: Path):
        report = _report()
        file_path = report.save(tmp_path / "nested" / "report.json")
        assert TestReport.load(file_path) == report

    def test_frames(self):
        report = _report()
        assert list(report.per_h_frame()["h"]) == [0.02, 0.025]
        assert len(report.replicates_frame()) == 98

    def test_format_text(self):
        text = _report().format_text()
        assert "Test statistic L_n" in text
        assert "Fit (closed-form)" in text
        assert "B=98 of 99, failed=1" in text
        assert "nan" in text
        assert text.splitlines()[-1] == "WARNING: 1 bootstrap replicate(s) failed and were skipped"


def test_format_reports():
    text = format_reports([_report("vasicek", 1.25), _report("cir", -0.5)])
    lines = text.splitlines()
    assert lines[0].split() == ["vasicek", "cir"]
    assert lines[1].split()[-2:] == ["1.2500", "-0.5000"]
    assert lines[2].startswith("Critical value l*_0.05")
    assert lines[3].startswith("p-value")


def test_write_outputs(tmp_path: Path):
    outputs = write_outputs(_report(), tmp_path)
    assert {path.name for path in outputs.values()} == {
        "test_report.json",
        "test_report.txt",
        "test_per_bandwidth.csv",
        "test_replicates.csv",
    }
    assert all(path.exists() for path in outputs.values())
    per_h = pd.read_csv(outputs["per_h"])
    assert per_h["h"].tolist() == [0.02, 0.025]
    assert np.isnan(per_h["critical_value"].iloc[0])
    replicates = pd.read_csv(outputs["replicates"])
    assert replicates["L_n_star"].iloc[-1] == pytest.approx(3.0)
