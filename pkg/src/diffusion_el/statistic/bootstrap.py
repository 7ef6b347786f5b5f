"""Parametric bootstrap calibration of L_n.

Every replicate draws X_1 from the fitted stationary law, simulates a path of the observed length under
the fitted parameters, refits the model with the same routine and recomputes the statistics with the same
region, grid and variant.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from diffusion_el.models.estimation import fit_mle
from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import DiffusionModel, ParamVector, ThetaLike
from diffusion_el.statistic.bandwidth import BandwidthRule, BandwidthSet
from diffusion_el.statistic.el_statistic import Mode, Variant, compute_statistics
from diffusion_el.statistic.region import Region
from diffusion_el.utils.errors import BootstrapAbortError, DiffusionElError
from diffusion_el.utils.helper_functions import derive_rng, parallel_map

logger = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.10


def critical_index(n_replicates: int, alpha: float) -> int:
    """0-based position of the critical value among the sorted replicates.

    The critical value is the ([B(1 - alpha)] + 1)-th order statistic.

    Examples
    --------
    >>> critical_index(250, 0.05)
    237
    """
    return min(int(np.floor(n_replicates * (1.0 - alpha))), n_replicates - 1)


def critical_value(replicates: Sequence[float], alpha: float) -> float:
    """Bootstrap critical value l*_alpha; alpha = 1 gives -inf (the test always rejects)."""
    if alpha >= 1.0:
        return -np.inf
    ordered = np.sort(np.asarray(replicates, dtype=float))
    return float(ordered[critical_index(ordered.size, alpha)])


def p_value(observed: float, replicates: Sequence[float]) -> float:
    """Monte Carlo p-value (1 + #{L*_b >= observed}) / (B + 1).

    Examples
    --------
    >>> round(p_value(10.0, np.arange(250.0) - 300), 6)
    0.003984
    >>> p_value(-1.0, [0.0, 1.0])
    1.0
    """
    replicates = np.asarray(replicates, dtype=float)
    if replicates.size == 0:
        raise ValueError("The p-value needs at least one replicate")
    return float((1 + np.sum(replicates >= observed)) / (replicates.size + 1))


@dataclass
class BootstrapResult:
    """Bootstrap calibration of L_n.

    `replicate_matrix` holds the standardized statistics (N(h_k) - 1)/(sqrt(2) h_k) of every successful
    replicate in replicate order, one column per bandwidth; it calibrates the single-bandwidth tests.
    """

    observed_L_n: float  # noqa: N815
    replicates: np.ndarray
    critical_value: float
    p_value: float
    alpha: float
    B: int  # noqa: N815
    per_replicate_fit_failures: int
    requested_B: int  # noqa: N815
    observed_standardized: np.ndarray = field(default_factory=lambda: np.empty(0))
    replicate_matrix: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    bandwidths: np.ndarray = field(default_factory=lambda: np.empty(0))
    redraws: int = 0
    nonconverged_fits: int = 0

    @property
    def reject(self) -> bool:
        """True if L_n >= l*_alpha."""
        return bool(self.observed_L_n >= self.critical_value)

    def per_bandwidth(self) -> pd.DataFrame:
        """Single-bandwidth bootstrap tests (h, statistic, critical value, p-value, reject)."""
        rows = []
        for k, h in enumerate(self.bandwidths):
            column = self.replicate_matrix[:, k] if self.replicate_matrix.size else np.empty(0)
            observed = float(self.observed_standardized[k])
            crit = critical_value(column, self.alpha) if column.size else np.nan
            rows.append(
                {
                    "h": float(h),
                    "statistic": observed,
                    "critical_value": crit,
                    "p_value": p_value(observed, column) if column.size else np.nan,
                    "reject": bool(observed >= crit),
                }
            )
        return pd.DataFrame(rows, columns=["h", "statistic", "critical_value", "p_value", "reject"])

    def to_frame(self) -> pd.DataFrame:
        """Sorted replicates as a one-column DataFrame."""
        return pd.DataFrame({"L_n_star": self.replicates})

    def to_dict(self) -> dict:
        """Serializable representation."""
        return {
            "observed_L_n": self.observed_L_n,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "B": self.B,
            "requested_B": self.requested_B,
            "per_replicate_fit_failures": self.per_replicate_fit_failures,
            "redraws": self.redraws,
            "nonconverged_fits": self.nonconverged_fits,
            "reject": self.reject,
            "replicates": self.replicates.tolist(),
            "per_bandwidth": self.per_bandwidth().to_dict(orient="records"),
        }


@dataclass
class ReplicateTask:
    """Everything a replicate needs; picklable so replicates can run in worker processes."""

    index: int
    model: DiffusionModel
    theta: ParamVector
    n: int
    delta: float
    region: Region
    bandwidths: Optional[Tuple[float, ...]]
    rule: Optional[BandwidthRule]
    variant: Variant
    mode: Mode
    grid: Tuple[int, int]
    seed: int
    keys: Tuple[int, ...]


@dataclass
class ReplicateOutcome:
    """Standardized statistics of a replicate, or None when both attempts failed."""

    index: int
    standardized: Optional[np.ndarray]
    L_n: Optional[float]  # noqa: N815
    redrawn: bool
    converged: bool
    error: str = ""


def _attempt(task: ReplicateTask, keys: Tuple[int, ...]) -> Tuple[np.ndarray, float, bool]:
    rng = derive_rng(task.seed, *keys)
    x0 = float(task.model.sample_stationary(task.theta, rng))
    path = task.model.simulate_path(task.theta, task.n, task.delta, x0, rng)
    fit = fit_mle(task.model, path)
    if not np.all(np.isfinite(fit.theta_hat.values)):
        raise BootstrapAbortError("Non-finite replicate estimate")
    bandwidths = task.rule.select(path) if task.rule is not None else task.bandwidths
    stats = compute_statistics(
        path, task.model, fit.theta_hat, task.region, bandwidths, task.variant, task.mode, task.grid
    )
    if not np.isfinite(stats.L_n):
        raise BootstrapAbortError("Non-finite replicate statistic")
    return stats.standardized, stats.L_n, fit.converged


def run_replicate(task: ReplicateTask) -> ReplicateOutcome:
    """Simulate, refit and recompute one replicate; a failed replicate is re-drawn once."""
    keys = task.keys + (task.index,)
    error = ""
    for redraw, attempt_keys in enumerate((keys, keys + (1,))):
        try:
            standardized, value, converged = _attempt(task, attempt_keys)
        except (DiffusionElError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            error = str(exc)
            logger.debug(f"Replicate {task.index} attempt {redraw + 1} failed: {error}")
            continue
        return ReplicateOutcome(task.index, standardized, value, bool(redraw), converged)
    return ReplicateOutcome(task.index, None, None, True, False, error)


def bootstrap_test(
    path: ObservedPath,
    model: DiffusionModel,
    theta: ThetaLike,
    region: Region,
    h_set: Union[BandwidthSet, Sequence[float]],
    variant: Union[str, Variant] = Variant.LSEL,
    B: int = 250,  # noqa: N803
    alpha: float = 0.05,
    seed: int = 0,
    mode: Union[str, Mode] = Mode.GRID,
    grid: Tuple[int, int] = (40, 40),
    rule: Optional[BandwidthRule] = None,
    reselect: Optional[bool] = None,
    workers: int = 1,
    keys: Tuple[int, ...] = (),
    observed: Optional[Tuple[float, np.ndarray]] = None,
) -> BootstrapResult:
    """Calibrate L_n by the parametric bootstrap.

    Parameters
    ----------
    path: ObservedPath
        Observed path.
    model: DiffusionModel
        Null model.
    theta: ParamVector, sequence or mapping
        Fit on the observed path.
    region: Region
        Integration region.
    h_set: BandwidthSet or sequence of float
        Bandwidths of the observed statistic.
    variant: str or Variant, optional, default is "lsel"
        Local ratio.
    B: int, optional, default is 250
        Number of replicates (at least 99).
    alpha: float, optional, default is 0.05
        Level, in (0, 1].
    seed: int, optional, default is 0
        Master seed; replicate b uses the stream derived from (seed, *keys, b).
    mode: str or Mode, optional, default is "grid"
        Grid integral or data average.
    grid: tuple, optional, default is (40, 40)
        Region grid.
    rule: BandwidthRule, optional
        Rule that produced `h_set`; needed to reselect bandwidths per replicate.
    reselect: bool, optional
        Reselect the bandwidths on every replicate; default is True for data-driven rules.
    workers: int, optional, default is 1
        Number of processes (-1 for all cores); results do not depend on it.
    keys: tuple of int, optional
        Extra stream keys, e.g. the Monte Carlo repetition of a study.
    observed: tuple, optional
        Precomputed (L_n, standardized vector) of the observed path.

    Returns
    -------
    BootstrapResult

    Raises
    ------
    BootstrapAbortError
        If more than 10% of the replicates fail twice.
    """
    if B < 99:
        raise ValueError(f"B must be at least 99, given: {B}")
    if not 0 < alpha <= 1:
        raise ValueError(f"alpha must lie in (0, 1], given: {alpha}")
    variant = Variant(variant)
    mode = Mode(mode)
    theta = model.params(theta)
    bandwidths = tuple(float(h) for h in getattr(h_set, "values", h_set))
    if reselect is None:
        reselect = rule is not None and rule.data_driven
    if reselect and rule is None:
        raise ValueError("Reselecting bandwidths needs the bandwidth rule")

    if observed is None:
        stats = compute_statistics(path, model, theta, region, bandwidths, variant, mode, grid)
        observed = (stats.L_n, stats.standardized)
    observed_l_n, observed_standardized = observed

    tasks = [
        ReplicateTask(
            index=b,
            model=model,
            theta=theta,
            n=path.n,
            delta=path.delta,
            region=region,
            bandwidths=None if reselect else bandwidths,
            rule=rule if reselect else None,
            variant=variant,
            mode=mode,
            grid=grid,
            seed=seed,
            keys=tuple(keys),
        )
        for b in range(B)
    ]
    outcomes: List[ReplicateOutcome] = parallel_map(run_replicate, tasks, workers)
    outcomes.sort(key=lambda item: item.index)

    failures = sum(item.L_n is None for item in outcomes)
    if failures > MAX_FAILURE_SHARE * B:
        last_error = next((item.error for item in outcomes if item.L_n is None), "")
        raise BootstrapAbortError(f"{failures} of {B} bootstrap replicates failed (last error: {last_error})")
    good = [item for item in outcomes if item.L_n is not None]
    values = np.array([item.L_n for item in good])
    if reselect:
        matrix = np.empty((0, 0))
    else:
        matrix = np.vstack([item.standardized for item in good])
    replicates = np.sort(values)
    result = BootstrapResult(
        observed_L_n=float(observed_l_n),
        replicates=replicates,
        critical_value=critical_value(replicates, alpha),
        p_value=p_value(observed_l_n, replicates),
        alpha=alpha,
        B=int(replicates.size),
        per_replicate_fit_failures=failures,
        requested_B=B,
        observed_standardized=np.asarray(observed_standardized, dtype=float),
        replicate_matrix=matrix,
        bandwidths=np.asarray(bandwidths),
        redraws=sum(item.redrawn for item in outcomes),
        nonconverged_fits=sum(not item.converged for item in good),
    )
    if failures:
        logger.warning(f"{failures} bootstrap replicate(s) skipped after a redraw")
    logger.info(
        f"Bootstrap: L_n={result.observed_L_n:.4f}, critical value={result.critical_value:.4f}, "
        f"p-value={result.p_value:.4f}, B={result.B}"
    )
    return result
