"""Monte Carlo size and power studies."""

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from diffusion_el.models.estimation import fit_mle
from diffusion_el.statistic.asymptotic import asymptotic_ref
from diffusion_el.statistic.bootstrap import bootstrap_test
from diffusion_el.statistic.el_statistic import compute_statistics
from diffusion_el.study.designs import StudyDesign
from diffusion_el.utils.errors import DiffusionElError, StudyAbortError
from diffusion_el.utils.helper_functions import derive_rng, parallel_map

logger = logging.getLogger(__name__)

MAX_FAILURE_SHARE = 0.05
ASYMPTOTIC_STREAM = 2**32 - 1
ASYMPTOTIC_DRAWS = 100_000


@dataclass
class RepRecord:
    """Outcome of one Monte Carlo repetition."""

    rep: int
    seed: int
    theta_hat: dict = field(default_factory=dict)
    converged: bool = False
    L_n: float = np.nan  # noqa: N815
    critical_value: float = np.nan
    p_value: float = np.nan
    reject: bool = False
    bandwidths: List[float] = field(default_factory=list)
    single_reject: List[bool] = field(default_factory=list)
    asymptotic_reject: Optional[bool] = None
    asymptotic_single_reject: List[bool] = field(default_factory=list)
    boot_failures: int = 0
    error: str = ""

    @property
    def failed(self) -> bool:
        """True if the repetition produced no decision."""
        return bool(self.error)

    def to_row(self) -> dict:
        """Flat CSV row."""
        row = {
            "rep": self.rep,
            "seed": self.seed,
            "converged": self.converged,
            "L_n": self.L_n,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "reject": self.reject,
            "asymptotic_reject": self.asymptotic_reject,
            "boot_failures": self.boot_failures,
            "error": self.error,
        }
        row.update({f"theta_{key}": value for key, value in self.theta_hat.items()})
        for k, (h, decision) in enumerate(zip(self.bandwidths, self.single_reject), start=1):
            row[f"h{k}"] = h
            row[f"reject_h{k}"] = decision
        for k, decision in enumerate(self.asymptotic_single_reject, start=1):
            row[f"asymptotic_reject_h{k}"] = decision
        return row


def run_rep(design: StudyDesign, rep: int, workers: int = 1) -> RepRecord:
    """Simulate a path from the truth, fit the null, bootstrap the test (and the asymptotic tests)."""
    record = RepRecord(rep=rep, seed=design.seed)
    try:
        truth = design.truth_model
        null = design.null_model
        rng = derive_rng(design.seed, rep)
        x0 = float(truth.sample_stationary(design.theta, rng))
        path = truth.simulate_path(design.theta, design.n, design.delta, x0, rng)
        fit = fit_mle(null, path)
        record.theta_hat = fit.theta_hat.as_dict()
        record.converged = fit.converged
        bandwidths = design.rule.select(path)
        stats = compute_statistics(
            path, null, fit.theta_hat, design.region, bandwidths, design.variant, design.mode, design.grid
        )
        boot = bootstrap_test(
            path,
            null,
            fit.theta_hat,
            design.region,
            bandwidths,
            design.variant,
            B=design.B,
            alpha=design.alpha,
            seed=design.seed,
            mode=design.mode,
            grid=design.grid,
            rule=design.rule,
            reselect=design.reselect,
            workers=workers,
            keys=(rep,),
            observed=(stats.L_n, stats.standardized),
        )
        record.L_n = boot.observed_L_n
        record.critical_value = boot.critical_value
        record.p_value = boot.p_value
        record.reject = boot.reject
        record.boot_failures = boot.per_replicate_fit_failures
        record.bandwidths = [float(h) for h in bandwidths]
        per_h = boot.per_bandwidth()
        record.single_reject = [bool(value) for value in per_h["reject"]]
        if design.asymptotic:
            ref = asymptotic_ref(
                path,
                bandwidths,
                design.region,
                design.grid,
                rng=derive_rng(design.seed, rep, ASYMPTOTIC_STREAM),
                n_draws=ASYMPTOTIC_DRAWS,
            )
            record.asymptotic_reject = ref.reject_max(stats.L_n, design.alpha)
            record.asymptotic_single_reject = [
                ref.reject_single(value, k, design.alpha) for k, value in enumerate(stats.standardized)
            ]
    except (DiffusionElError, ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
        record.error = f"{type(exc).__name__}: {exc}"
        logger.warning(f"Repetition {rep} of {design.name} failed: {record.error}")
    logger.debug(f"Repetition {rep}: L_n={record.L_n:.4f}, p-value={record.p_value:.4f}")
    return record


def _rate(decisions: np.ndarray) -> float:
    return float(np.mean(decisions)) if decisions.size else np.nan


@dataclass
class StudyResult:
    """Rejection rates of a study.

    `per_bandwidth_rates` are the single-bandwidth bootstrap tests by position in the set;
    `asymptotic_rate` is the asymptotic test on L_n and `per_bandwidth_asymptotic_rates` the
    single-bandwidth asymptotic tests.
    """

    design: StudyDesign
    records: List[RepRecord]
    wall_time: float
    rejection_rate: float = field(init=False)
    binomial_se: float = field(init=False)
    per_bandwidth_rates: np.ndarray = field(init=False)
    asymptotic_rate: Optional[float] = field(init=False)
    per_bandwidth_asymptotic_rates: np.ndarray = field(init=False)

    def __post_init__(self):
        """Aggregate the repetitions."""
        good = self.successful
        self.rejection_rate = _rate(np.array([item.reject for item in good], dtype=float))
        self.binomial_se = float(np.sqrt(self.rejection_rate * (1 - self.rejection_rate) / max(len(good), 1)))
        self.per_bandwidth_rates = self._by_position([item.single_reject for item in good])
        if self.design.asymptotic:
            self.asymptotic_rate = _rate(np.array([item.asymptotic_reject for item in good], dtype=float))
            self.per_bandwidth_asymptotic_rates = self._by_position([item.asymptotic_single_reject for item in good])
        else:
            self.asymptotic_rate = None
            self.per_bandwidth_asymptotic_rates = np.empty(0)

    @staticmethod
    def _by_position(decisions: List[List[bool]]) -> np.ndarray:
        if not decisions or not decisions[0]:
            return np.empty(0)
        width = min(len(row) for row in decisions)
        return np.array([row[:width] for row in decisions], dtype=float).mean(axis=0)

    @property
    def successful(self) -> List[RepRecord]:
        """Repetitions with a decision."""
        return [item for item in self.records if not item.failed]

    @property
    def failures(self) -> int:
        """Number of failed repetitions."""
        return len(self.records) - len(self.successful)

    def to_frame(self) -> pd.DataFrame:
        """One row per repetition."""
        return pd.DataFrame([item.to_row() for item in self.records])

    def summary(self, include_timing: bool = False) -> dict:
        """Serializable summary; `wall_time` only with `include_timing`."""
        content = {
            "design": self.design.to_dict(),
            "rejection_rate": self.rejection_rate,
            "binomial_se": self.binomial_se,
            "per_bandwidth_rates": self.per_bandwidth_rates.tolist(),
            "asymptotic_rate": self.asymptotic_rate,
            "per_bandwidth_asymptotic_rates": self.per_bandwidth_asymptotic_rates.tolist(),
            "n_reps": len(self.records),
            "failures": self.failures,
        }
        if include_timing:
            content["wall_time"] = self.wall_time
        return content

    def format_table(self) -> str:
        """Rates in percent, one column per bandwidth and the L_n test last; asymptotic rates in brackets."""
        design = self.design
        kind = "size" if design.is_size_study else "power"
        lines = [
            f"{design.name}: truth {design.truth_family.value}, null {design.null_family.value}, n={design.n}, "
            f"B={design.B}, reps={len(self.successful)}, alpha={design.alpha}",
        ]
        if design.rule.values:
            header = "".join(f"{h:>10.4g}" for h in design.rule.values)
        else:
            header = "".join(f"{'h' + str(k + 1):>10}" for k in range(self.per_bandwidth_rates.size))
        lines.append(f"{'h':<8}{header}{'L_n':>10}")
        rates = "".join(f"{100 * r:>10.1f}" for r in self.per_bandwidth_rates)
        lines.append(f"{kind:<8}{rates}{100 * self.rejection_rate:>10.1f}")
        if self.asymptotic_rate is not None:
            brackets = "".join(f"{'(' + format(100 * r, '.1f') + ')':>10}" for r in self.per_bandwidth_asymptotic_rates)
            lines.append(f"{'':<8}{brackets}{'(' + format(100 * self.asymptotic_rate, '.1f') + ')':>10}")
        lines.append(f"binomial SE of the L_n rate: {100 * self.binomial_se:.2f}")
        return "\n".join(lines)


def _rep_worker(args):
    design, rep = args
    return run_rep(design, rep)


def run_study(design: StudyDesign) -> StudyResult:
    """Run every repetition of a design.

    Repetitions run in `design.workers` processes; the bootstrap inside a repetition then runs serially.
    Decisions depend only on the design and its seed.

    Raises
    ------
    StudyAbortError
        If more than 5% of the repetitions fail.
    """
    start = time.perf_counter()
    logger.info(f"Study {design.name}: {design.n_reps} repetitions, n={design.n}, B={design.B}")
    if design.workers == 1:
        records = [run_rep(design, rep) for rep in range(design.n_reps)]
    else:
        records = parallel_map(_rep_worker, [(design, rep) for rep in range(design.n_reps)], design.workers)
    records.sort(key=lambda item: item.rep)
    failures = sum(item.failed for item in records)
    if failures > MAX_FAILURE_SHARE * design.n_reps:
        raise StudyAbortError(f"{failures} of {design.n_reps} repetitions of {design.name} failed")
    result = StudyResult(design=design, records=records, wall_time=time.perf_counter() - start)
    logger.info(
        f"Study {design.name}: rejection rate {result.rejection_rate:.3f} (SE {result.binomial_se:.3f}) "
        f"in {result.wall_time:.1f}s"
    )
    return result


def run_size_study(design: StudyDesign) -> StudyResult:
    """Empirical size; the truth must belong to the null family."""
    if not design.is_size_study:
        raise ValueError(
            f"A size study simulates from the null family, given truth {design.truth_family.value} "
            f"and null {design.null_family.value}"
        )
    return run_study(design)


def run_power_study(design: StudyDesign) -> StudyResult:
    """Empirical power against the truth of the design."""
    if design.is_size_study:
        logger.warning(f"{design.name}: the truth belongs to the null family, the rate is an empirical size")
    return run_study(design)


def record_dicts(result: StudyResult) -> List[dict]:
    """Records as plain dictionaries."""
    return [asdict(item) for item in result.records]
