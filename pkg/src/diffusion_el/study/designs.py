"""Monte Carlo study designs and their presets."""

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

from diffusion_el.models.zoo import MODEL_PRESETS, DiffusionModel, Family, ParamVector, get_model
from diffusion_el.statistic.bandwidth import BANDWIDTH_PRESETS, BandwidthRule, BandwidthScheme
from diffusion_el.statistic.el_statistic import Mode, Variant
from diffusion_el.statistic.region import REGION_PRESETS, Region

DESK_BOOT = 99
FULL_BOOT = 250
FULL_REPS = 500


@dataclass(frozen=True)
class StudyDesign:
    """A size or power experiment.

    Parameters
    ----------
    name: str
        Label used in the outputs.
    truth_family: Family
        Family the data are simulated from.
    theta_truth: dict
        Parameters of the truth.
    null_family: Family
        Family under test.
    n: int
        Number of transitions per path.
    region: Region
        Integration region.
    rule: BandwidthRule
        Bandwidth set of every path (fixed or data driven).
    delta: float, optional, default is 1/12
        Sampling interval.
    B: int, optional, default is 99
        Bootstrap replicates.
    alpha: float, optional, default is 0.05
        Nominal level.
    n_reps: int, optional, default is 200
        Monte Carlo repetitions.
    seed: int, optional, default is 0
        Master seed.
    asymptotic: bool, optional, default is True
        Also run the asymptotic tests.
    """

    name: str
    truth_family: Family
    theta_truth: Dict[str, float]
    null_family: Family
    n: int
    region: Region
    rule: BandwidthRule
    delta: float = 1.0 / 12.0
    B: int = DESK_BOOT  # noqa: N815
    alpha: float = 0.05
    n_reps: int = 200
    seed: int = 0
    variant: Variant = Variant.LSEL
    mode: Mode = Mode.GRID
    grid: Tuple[int, int] = (40, 40)
    asymptotic: bool = True
    euler_substeps: int = 20
    workers: int = 1
    reselect: Optional[bool] = None
    metadata: Dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        """Validate the design."""
        object.__setattr__(self, "truth_family", Family(self.truth_family))
        object.__setattr__(self, "null_family", Family(self.null_family))
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.n_reps < 10:
            raise ValueError(f"A study needs at least 10 repetitions, given: {self.n_reps}")
        if self.n < 2:
            raise ValueError(f"n must be at least 2, given: {self.n}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], given: {self.alpha}")
        self.truth_model.params(self.theta_truth)

    @property
    def truth_model(self) -> DiffusionModel:
        """Model the paths are simulated from."""
        return get_model(self.truth_family, euler_substeps=self.euler_substeps)

    @property
    def null_model(self) -> DiffusionModel:
        """Model under test."""
        return get_model(self.null_family, euler_substeps=self.euler_substeps)

    @property
    def theta(self) -> ParamVector:
        """Validated truth parameters."""
        return self.truth_model.params(self.theta_truth)

    @property
    def is_size_study(self) -> bool:
        """True if the data come from the null family."""
        return self.truth_family == self.null_family

    def scaled(self, **changes) -> "StudyDesign":
        """Copy of the design with some fields changed."""
        return replace(self, **changes)

    def to_dict(self) -> dict:
        """Serializable representation."""
        return {
            "name": self.name,
            "truth_family": self.truth_family.value,
            "theta_truth": dict(self.theta_truth),
            "null_family": self.null_family.value,
            "n": self.n,
            "delta": self.delta,
            "region": self.region.as_dict(),
            "bandwidth_scheme": self.rule.scheme.value,
            "bandwidths": list(self.rule.values) if self.rule.values else None,
            "B": self.B,
            "alpha": self.alpha,
            "n_reps": self.n_reps,
            "seed": self.seed,
            "variant": self.variant.value,
            "mode": self.mode.value,
            "grid": list(self.grid),
            "asymptotic": self.asymptotic,
        }


# preset name -> (truth model preset, null family, region preset, bandwidth preset, desk repetitions)
STUDY_PRESETS: Dict[str, Tuple[str, Family, str, str, int]] = {
    "vasicek-table1": ("vasicek0", Family.VASICEK, "vasicek0", "vasicek0", 200),
    "vasicek-2-table1": ("vasicek-2", Family.VASICEK, "vasicek-2", "vasicek-2", 200),
    "vasicek2-table1": ("vasicek2", Family.VASICEK, "vasicek2", "vasicek2", 200),
    "cir-table3": ("cir0", Family.CIR, "cir0", "cir0", 200),
    "cir1-table3": ("cir1", Family.CIR, "cir1", "cir1", 200),
    "cir2-table3": ("cir2", Family.CIR, "cir2", "cir2", 200),
    "power-table4a": ("cir0", Family.VASICEK, "cir0", "power-cir0-vasicek", 100),
}


def _with_model(name: str, model: str) -> Tuple[str, Family, str, str, int]:
    """Preset entry with its truth replaced by a model preset, keeping the null family."""
    if model not in MODEL_PRESETS:
        raise ValueError(f"Unknown model preset: {model}, available: {list(MODEL_PRESETS)}")
    model_preset, null_family, _, _, reps = STUDY_PRESETS[name]
    if model == model_preset:
        return STUDY_PRESETS[name]
    family = MODEL_PRESETS[model][0]
    size_study = MODEL_PRESETS[model_preset][0] == null_family
    if size_study and family != null_family:
        raise ValueError(f"The size study {name} tests {null_family.value}, the model {model} is {family.value}")
    return model, null_family, model, model, reps


def get_design(
    name: str,
    n: int = 125,
    full_scale: bool = False,
    data_driven: bool = False,
    model: Optional[str] = None,
    **overrides,
) -> StudyDesign:
    """Build a preset design.

    Parameters
    ----------
    name: str
        A key of `STUDY_PRESETS`: the Vasicek size studies "vasicek-2-table1", "vasicek-table1" and
        "vasicek2-table1", the CIR size studies "cir-table3", "cir1-table3" and "cir2-table3", or the power
        study "power-table4a".
    n: int, optional, default is 125
        Sample size (125, 250 or 500 for the fixed bandwidth sets).
    full_scale: bool, optional, default is False
        B=250 and 500 repetitions instead of the desk scale (B=99, 100-200 repetitions).
    data_driven: bool, optional, default is False
        Use the Scott bandwidth as the third smallest of six with a=0.95 on every path instead of the fixed
        set.
    model: str, optional
        A key of `MODEL_PRESETS` replacing the truth of the preset, with its own region and bandwidth set.
        A size study keeps its null family, so the model must belong to it.
    **overrides:
        Any other `StudyDesign` field.

    Returns
    -------
    StudyDesign
    """
    if name not in STUDY_PRESETS:
        raise ValueError(f"Unknown study preset: {name}, available: {list(STUDY_PRESETS)}")
    entry = STUDY_PRESETS[name] if model is None else _with_model(name, model)
    model_preset, null_family, region_preset, bandwidth_preset, reps = entry
    truth_family, theta = MODEL_PRESETS[model_preset]
    if data_driven:
        rule = BandwidthRule(BandwidthScheme.REF_THIRD_SMALLEST, J=6, a=0.95)
    else:
        if n not in BANDWIDTH_PRESETS[bandwidth_preset]:
            available = list(BANDWIDTH_PRESETS[bandwidth_preset])
            raise ValueError(f"The preset {name} has fixed bandwidths for n in {available}")
        rule = BandwidthRule(BandwidthScheme.FIXED, values=BANDWIDTH_PRESETS[bandwidth_preset][n])
    settings = {
        "name": name,
        "truth_family": truth_family,
        "theta_truth": dict(theta),
        "null_family": null_family,
        "n": n,
        "region": REGION_PRESETS[region_preset],
        "rule": rule,
        "B": FULL_BOOT if full_scale else DESK_BOOT,
        "n_reps": FULL_REPS if full_scale else reps,
    }
    settings.update(overrides)
    return StudyDesign(**settings)
