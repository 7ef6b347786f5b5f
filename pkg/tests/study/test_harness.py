import numpy as np
import pytest

from diffusion_el.statistic.bandwidth import BandwidthRule
from diffusion_el.study.designs import StudyDesign, get_design
from diffusion_el.study.harness import (
    RepRecord,
    StudyResult,
    record_dicts,
    run_power_study,
    run_rep,
    run_size_study,
    run_study,
)
from diffusion_el.utils.errors import StudyAbortError


@pytest.fixture()
def small_design() -> StudyDesign:
    """Ten repetitions of a coarse version of the Vasicek size design."""
    return get_design("vasicek-table1", n_reps=10, grid=(8, 8), seed=11)


def _record(rep: int, reject: bool, single: list, asymptotic: bool = False, error: str = "") -> RepRecord:
    return RepRecord(
        rep=rep,
        seed=0,
        theta_hat={"kappa": 0.8, "alpha": 0.09, "sigma2": 0.002},
        converged=True,
        L_n=1.0,
        critical_value=2.0,
        p_value=0.3,
        reject=reject,
        bandwidths=[0.016, 0.017],
        single_reject=single,
        asymptotic_reject=asymptotic,
        asymptotic_single_reject=[asymptotic, False],
        error=error,
    )


class TestRepRecord:

    def test_failed(self):
        assert not _record(0, False, [False, False]).failed
        assert _record(0, False, [False, False], error="ValueError: boom").failed

    def test_to_row(self):
        row = _record(3, True, [True, False], asymptotic=True).to_row()
        assert row["rep"] == 3
        assert row["theta_kappa"] == 0.8
        assert row["h1"] == 0.016
        assert row["reject_h1"] is True
        assert row["reject_h2"] is False
        assert row["asymptotic_reject_h1"] is True


class TestStudyResult:

    @pytest.fixture()
    def result(self) -> StudyResult:
        design = get_design("vasicek-table1", n_reps=10)
        records = [
            _record(0, True, [True, False], asymptotic=True),
            _record(1, False, [False, False]),
            _record(2, False, [True, True]),
            _record(3, True, [False, True], asymptotic=True),
            _record(4, False, [False, False], error="EstimationError: no fit"),
        ]
        return StudyResult(design=design, records=records, wall_time=1.5)

    def test_rates(self, result: StudyResult):
        assert len(result.successful) == 4
        assert result.failures == 1
        assert result.rejection_rate == pytest.approx(0.5)
        assert result.binomial_se == pytest.approx(np.sqrt(0.25 / 4))
        np.testing.assert_allclose(result.per_bandwidth_rates, [0.5, 0.5])
        assert result.asymptotic_rate == pytest.approx(0.5)
        np.testing.assert_allclose(result.per_bandwidth_asymptotic_rates, [0.5, 0.0])

    def test_without_asymptotic(self, result: StudyResult):
        other = StudyResult(design=result.design.scaled(asymptotic=False), records=result.records, wall_time=0.0)
        assert other.asymptotic_rate is None
        assert other.per_bandwidth_asymptotic_rates.size == 0
        assert "(" not in other.format_table()

    def test_summary(self, result: StudyResult):
        summary = result.summary()
        assert "wall_time" not in summary
        assert summary["n_reps"] == 5
        assert summary["failures"] == 1
        assert summary["rejection_rate"] == pytest.approx(0.5)
        assert summary["design"]["name"] == "vasicek-table1"
        assert result.summary(include_timing=True)["wall_time"] == 1.5

    def test_format_table(self, result: StudyResult):
        table = result.format_table()
        lines = table.splitlines()
        assert lines[0].startswith("vasicek-table1: truth vasicek, null vasicek")
        assert lines[2].split() == ["size", "50.0", "50.0", "50.0"]
        assert lines[3].split() == ["(50.0)", "(0.0)", "(50.0)"]
        assert "binomial SE" in lines[-1]

    def test_frames(self, result: StudyResult):
        frame = result.to_frame()
        assert len(frame) == 5
        assert {"rep", "L_n", "reject", "error"} <= set(frame.columns)
        assert record_dicts(result)[1]["rep"] == 1


class TestRunRep:

    def test_reproducible(self, small_design: StudyDesign):
        first = run_rep(small_design, 2)
        second = run_rep(small_design, 2)
        assert not first.failed
        assert first.L_n == second.L_n
        assert first.critical_value == second.critical_value
        assert first.p_value == second.p_value
        assert len(first.single_reject) == 6
        assert len(first.asymptotic_single_reject) == 6
        assert first.reject == (first.L_n >= first.critical_value)

    def test_repetitions_differ(self, small_design: StudyDesign):
        design = small_design.scaled(asymptotic=False)
        first = run_rep(design, 0)
        second = run_rep(design, 1)
        assert first.theta_hat != second.theta_hat
        assert first.asymptotic_reject is None

    def test_failure_is_recorded(self, small_design: StudyDesign):
        design = small_design.scaled(n=5, rule=BandwidthRule(), asymptotic=False)
        record = run_rep(design, 0)
        assert record.failed
        assert np.isnan(record.L_n)


class TestRunStudy:

    def test_size_study_needs_the_null_truth(self):
        with pytest.raises(ValueError, match="size study"):
            run_size_study(get_design("power-table4a", n_reps=10))

    def test_study_aborts_on_failures(self, small_design: StudyDesign):
        with pytest.raises(StudyAbortError):
            run_study(small_design.scaled(n=5, rule=BandwidthRule(), asymptotic=False))

    @pytest.mark.slow
    def test_decisions_do_not_depend_on_the_worker_count(self, small_design: StudyDesign):
        design = small_design.scaled(asymptotic=False)
        serial = run_study(design)
        parallel = run_study(design.scaled(workers=2))
        assert [item.reject for item in serial.records] == [item.reject for item in parallel.records]
        assert [item.L_n for item in serial.records] == [item.L_n for item in parallel.records]
        assert [item.critical_value for item in serial.records] == [item.critical_value for item in parallel.records]


@pytest.fixture(scope="module")
def vasicek_size() -> StudyResult:
    """The desk-scale Vasicek size design: n=125, B=99, 200 repetitions."""
    return run_size_study(get_design("vasicek-table1", grid=(20, 20), seed=2024, workers=4))


@pytest.mark.slow
class TestDeskScaleStudies:

    def test_vasicek_size(self, vasicek_size: StudyResult):
        assert vasicek_size.failures <= 10
        assert 0.02 <= vasicek_size.rejection_rate <= 0.10

    def test_asymptotic_test_over_rejects(self, vasicek_size: StudyResult):
        single = float(np.mean(vasicek_size.per_bandwidth_asymptotic_rates))
        assert single > 0.10
        assert single > vasicek_size.rejection_rate

    def test_cir_size(self):
        result = run_size_study(get_design("cir-table3", grid=(20, 20), seed=2025, workers=4, asymptotic=False))
        assert result.failures <= 10
        assert 0.01 <= result.rejection_rate <= 0.10

    def test_power_against_cir(self):
        design = get_design("power-table4a", grid=(20, 20), seed=1, workers=4, asymptotic=False)
        small = run_power_study(design)
        large = run_power_study(get_design("power-table4a", n=500, grid=(20, 20), seed=1, workers=4, asymptotic=False))
        assert small.format_table().splitlines()[2].startswith("power")
        assert small.rejection_rate >= 0.5
        assert large.rejection_rate >= small.rejection_rate - 2 * np.hypot(small.binomial_se, large.binomial_se)
