import numpy as np
import pytest

from diffusion_el.models.estimation import fit_mle
from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import Vasicek
from diffusion_el.statistic.bandwidth import BandwidthRule
from diffusion_el.statistic.bootstrap import (
    BootstrapResult,
    ReplicateTask,
    bootstrap_test,
    critical_index,
    critical_value,
    p_value,
    run_replicate,
)
from diffusion_el.statistic.el_statistic import Mode, Variant, compute_statistics
from diffusion_el.statistic.region import REGION_PRESETS

BANDWIDTHS = (0.02, 0.025)
GRID = (10, 10)
REGION = REGION_PRESETS["vasicek0"]


@pytest.mark.parametrize(
    "n_replicates, alpha, expected", [(250, 0.05, 237), (99, 0.05, 94), (100, 0.1, 90), (99, 0.001, 98)]
)
def test_critical_index(n_replicates, alpha, expected):
    assert critical_index(n_replicates, alpha) == expected


def test_critical_value():
    replicates = np.arange(250.0)[::-1]
    assert critical_value(replicates, 0.05) == 237.0
    assert critical_value(replicates, 1.0) == -np.inf


def test_p_value():
    assert p_value(10.0, np.arange(250.0) - 300) == pytest.approx(1 / 251)
    assert p_value(0.5, [0.0, 1.0, 2.0]) == pytest.approx(3 / 4)
    assert p_value(1.0, [0.0, 1.0, 2.0]) == pytest.approx(3 / 4)
    with pytest.raises(ValueError):
        p_value(1.0, [])


class TestArguments:

    @pytest.mark.parametrize("arguments", [{"B": 98}, {"alpha": 0.0}, {"alpha": 1.5}, {"reselect": True}])
    def test_invalid(self, vasicek: Vasicek, short_path: ObservedPath, arguments):
        theta = fit_mle(vasicek, short_path).theta_hat
        with pytest.raises(ValueError):
            bootstrap_test(short_path, vasicek, theta, REGION, BANDWIDTHS, grid=GRID, **{"B": 99, **arguments})


class TestBootstrap:

    @pytest.fixture(scope="class")
    def theta(self, vasicek: Vasicek, short_path: ObservedPath):
        return fit_mle(vasicek, short_path).theta_hat

    @pytest.fixture(scope="class")
    def result(self, vasicek: Vasicek, short_path: ObservedPath, theta) -> BootstrapResult:
        return bootstrap_test(short_path, vasicek, theta, REGION, BANDWIDTHS, B=99, seed=3, grid=GRID)

    def test_replicates(self, result: BootstrapResult):
        assert result.requested_B == 99
        assert result.B + result.per_replicate_fit_failures == 99
        assert np.all(np.diff(result.replicates) >= 0)
        assert result.critical_value == result.replicates[critical_index(result.B, 0.05)]
        assert 0 < result.p_value <= 1
        assert result.reject == (result.observed_L_n >= result.critical_value)

    def test_observed_statistic(
        self, result: BootstrapResult, vasicek: Vasicek, short_path: ObservedPath, theta
    ):
        stats = compute_statistics(short_path, vasicek, theta, REGION, BANDWIDTHS, grid=GRID)
        assert result.observed_L_n == pytest.approx(stats.L_n)
        np.testing.assert_allclose(result.observed_standardized, stats.standardized)

    def test_reproducible(self, result: BootstrapResult, vasicek: Vasicek, short_path: ObservedPath, theta):
        again = bootstrap_test(short_path, vasicek, theta, REGION, BANDWIDTHS, B=99, seed=3, grid=GRID)
        np.testing.assert_array_equal(again.replicates, result.replicates)
        other = bootstrap_test(short_path, vasicek, theta, REGION, BANDWIDTHS, B=99, seed=4, grid=GRID)
        assert not np.array_equal(other.replicates, result.replicates)

    def test_workers_do_not_change_the_result(
        self, result: BootstrapResult, vasicek: Vasicek, short_path: ObservedPath, theta
    ):
        parallel = bootstrap_test(short_path, vasicek, theta, REGION, BANDWIDTHS, B=99, seed=3, grid=GRID, workers=2)
        np.testing.assert_array_equal(parallel.replicates, result.replicates)

    def test_per_bandwidth(self, result: BootstrapResult):
        assert result.replicate_matrix.shape == (result.B, 2)
        np.testing.assert_allclose(np.sort(result.replicate_matrix.max(axis=1)), result.replicates)
        frame = result.per_bandwidth()
        assert list(frame.columns) == ["h", "statistic", "critical_value", "p_value", "reject"]
        assert frame["h"].tolist() == list(BANDWIDTHS)
        assert frame["critical_value"].iloc[0] == critical_value(result.replicate_matrix[:, 0], 0.05)

    def test_serialization(self, result: BootstrapResult):
        assert result.to_frame()["L_n_star"].tolist() == result.replicates.tolist()
        content = result.to_dict()
        assert content["B"] == result.B
        assert len(content["replicates"]) == result.B
        assert len(content["per_bandwidth"]) == 2
        assert {"observed_L_n", "critical_value", "p_value", "reject", "redraws"} <= set(content)

    def test_reselected_bandwidths(self, vasicek: Vasicek, short_path: ObservedPath, theta):
        rule = BandwidthRule()
        h_set = rule.select(short_path)
        result = bootstrap_test(short_path, vasicek, theta, REGION, h_set, B=99, seed=3, grid=GRID, rule=rule)
        assert result.replicate_matrix.size == 0
        frame = result.per_bandwidth()
        assert len(frame) == h_set.J
        assert frame["critical_value"].isna().all()
        assert frame["p_value"].isna().all()
        assert not frame["reject"].any()


def test_run_replicate(vasicek: Vasicek, short_path: ObservedPath):
    theta = fit_mle(vasicek, short_path).theta_hat
    task = ReplicateTask(
        index=5,
        model=vasicek,
        theta=theta,
        n=short_path.n,
        delta=short_path.delta,
        region=REGION,
        bandwidths=BANDWIDTHS,
        rule=None,
        variant=Variant.LSEL,
        mode=Mode.GRID,
        grid=GRID,
        seed=3,
        keys=(),
    )
    outcome = run_replicate(task)
    assert outcome.index == 5
    assert not outcome.redrawn
    assert outcome.L_n == pytest.approx(outcome.standardized.max())
    assert run_replicate(task).L_n == outcome.L_n
