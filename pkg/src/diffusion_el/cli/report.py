"""Test reports: JSON round-trip, text layout and CSV dumps."""

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from diffusion_el.utils.helper_functions import RNG_NAME

logger = logging.getLogger(__name__)


def _clean(value: Any) -> Any:
    """Plain Python values; NaN becomes None."""
    if isinstance(value, dict):
        return {str(key): _clean(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(item) for item in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if np.isnan(value) else float(value)
    return value


INFINITIES = {"Infinity": float("inf"), "-Infinity": float("-inf")}


def _json_safe(value: Any) -> Any:
    """Infinities as the strings "Infinity" and "-Infinity"; JSON has no literal for them."""
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_json_safe(item) for item in value]
    if isinstance(value, float) and np.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return value


def _restore(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _restore(item) for key, item in value.items()}
    if isinstance(value, list):
        return [_restore(item) for item in value]
    if isinstance(value, str) and value in INFINITIES:
        return INFINITIES[value]
    return value


def dump_json(content: Any) -> str:
    """Standard JSON text (NaN as null, infinities as strings) with sorted keys."""
    return json.dumps(_json_safe(_clean(content)), indent=2, sort_keys=True, allow_nan=False)


@dataclass
class TestReport:
    """Outcome of the specification test on one data set.

    `per_h` holds one row per bandwidth: h, N_h, standardized statistic, hull_error_count,
    degenerate_windows, sparse_points and the single-bandwidth bootstrap critical_value, p_value and reject.
    """

    __test__ = False

    model: str
    n: int
    delta: float
    theta_hat: Dict[str, float]
    loglik: float
    converged: bool
    fit_method: str
    region: Dict[str, float]
    bandwidth_scheme: str
    bandwidths: List[float]
    variant: str
    mode: str
    grid: List[int]
    per_h: List[Dict[str, Any]]
    L_n: float  # noqa: N815
    critical_value: float
    p_value: float
    alpha: float
    reject: bool
    B: int  # noqa: N815
    requested_B: int  # noqa: N815
    failed_replicates: int
    redraws: int
    nonconverged_fits: int
    replicates: List[float]
    seed: int
    rng: str = RNG_NAME
    data_source: Optional[str] = None
    data_hash: Optional[str] = None
    config_hash: Optional[str] = None
    asymptotic: Optional[Dict[str, Any]] = None
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        """Store plain Python values only."""
        for item in fields(self):
            setattr(self, item.name, _clean(getattr(self, item.name)))

    @property
    def hull_errors(self) -> int:
        """Total number of capped local EL ratios."""
        return int(sum(row.get("hull_error_count", 0) for row in self.per_h))

    def to_dict(self) -> Dict[str, Any]:
        """Serializable representation."""
        return asdict(self)

    def to_json(self) -> str:
        """Standard JSON text with full precision and sorted keys."""
        return dump_json(self.to_dict())

    @classmethod
    def from_dict(cls, content: Dict[str, Any]) -> "TestReport":
        """Create a report from its dictionary."""
        return cls(**_restore(content))

    @classmethod
    def from_json(cls, text: str) -> "TestReport":
        """Parse the output of `to_json`."""
        return cls.from_dict(json.loads(text))

    def save(self, file_path: Union[str, Path]) -> Path:
        """Write the JSON report."""
        file_path = Path(file_path)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_text(self.to_json())
        return file_path

    @classmethod
    def load(cls, file_path: Union[str, Path]) -> "TestReport":
        """Read a JSON report."""
        return cls.from_json(Path(file_path).read_text())

    def per_h_frame(self) -> pd.DataFrame:
        """Per-bandwidth rows."""
        return pd.DataFrame(self.per_h)

    def replicates_frame(self) -> pd.DataFrame:
        """Sorted bootstrap replicates."""
        return pd.DataFrame({"L_n_star": self.replicates})

    def format_text(self) -> str:
        """Text report: the statistic table followed by the diagnostics."""
        lines = [format_reports([self]), ""]
        theta = ", ".join(f"{key}={value:.6g}" for key, value in self.theta_hat.items())
        lines.append(f"Fit ({self.fit_method}): {theta}, loglik={self.loglik:.6f}, converged={self.converged}")
        bounds = self.region
        lines.append(
            f"Region: u in [{bounds['u_min']:.6g}, {bounds['u_max']:.6g}], v in [{bounds['v_min']:.6g}, "
            f"{bounds['v_max']:.6g}]; {self.variant} statistic, {self.mode} mode, grid {self.grid[0]}x{self.grid[1]}"
        )
        lines.append(
            f"Bootstrap: B={self.B} of {self.requested_B}, failed={self.failed_replicates}, redraws={self.redraws}, "
            f"non-converged refits={self.nonconverged_fits}, seed={self.seed} ({self.rng})"
        )
        lines.append(f"Bandwidth scheme {self.bandwidth_scheme}, hull errors {self.hull_errors}")
        lines.append(f"{'h':>10}{'N(h)':>12}{'stand.':>10}{'crit.':>10}{'p-value':>10}{'reject':>8}")
        for row in self.per_h:
            lines.append(
                f"{row['h']:>10.5g}{row['N_h']:>12.6g}{row['standardized']:>10.4f}"
                f"{_number(row.get('critical_value'), '.4f'):>10}{_number(row.get('p_value'), '.4f'):>10}"
                f"{str(row.get('reject')):>8}"
            )
        if self.asymptotic:
            lines.append(
                f"Asymptotic: beta={self.asymptotic['beta']:.4f}, max-test critical value="
                f"{self.asymptotic['max_critical_value']:.4f}, reject={self.asymptotic['reject_max']}"
            )
        lines.extend(f"WARNING: {message}" for message in self.warnings)
        return "\n".join(lines)


def _number(value: Optional[float], spec: str) -> str:
    return "nan" if value is None else format(value, spec)


def format_reports(reports: Sequence[TestReport]) -> str:
    """Statistic, critical value and p-value of several models side by side, one column per model."""
    width = max(12, *(len(report.model) + 2 for report in reports))
    alpha = reports[0].alpha
    lines = [f"{'':<24}" + "".join(f"{report.model:>{width}}" for report in reports)]
    lines.append(f"{'Test statistic L_n':<24}" + "".join(f"{report.L_n:>{width}.4f}" for report in reports))
    lines.append(
        f"{'Critical value l*_' + format(alpha, 'g'):<24}"
        + "".join(f"{report.critical_value:>{width}.4f}" for report in reports)
    )
    lines.append(f"{'p-value':<24}" + "".join(f"{report.p_value:>{width}.4f}" for report in reports))
    return "\n".join(lines)


def write_outputs(report: TestReport, directory: Union[str, Path], prefix: str = "test") -> Dict[str, Path]:
    """Write the JSON and text reports and the per-bandwidth and replicate CSV files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    outputs = {
        "json": report.save(directory / f"{prefix}_report.json"),
        "text": directory / f"{prefix}_report.txt",
        "per_h": directory / f"{prefix}_per_bandwidth.csv",
        "replicates": directory / f"{prefix}_replicates.csv",
    }
    outputs["text"].write_text(report.format_text() + "\n")
    report.per_h_frame().to_csv(outputs["per_h"], index=False, float_format="%.17g")
    report.replicates_frame().to_csv(outputs["replicates"], index=False, float_format="%.17g")
    logger.info(f"Report written to {directory}")
    return outputs
