"""Load the run configuration from defaults, a YAML file and command-line overrides."""

import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import MODEL_PRESETS, DiffusionModel, Family, ParamVector, get_model
from diffusion_el.statistic.bandwidth import BandwidthRule, BandwidthScheme
from diffusion_el.statistic.el_statistic import Mode, Variant
from diffusion_el.statistic.region import Region, get_region
from diffusion_el.utils.errors import ConfigError, DiffusionElError
from diffusion_el.utils.helper_functions import RNG_NAME, generate_content_hash

logger = logging.getLogger(__name__)


@dataclass
class Config:
    """Validated settings of a command.

    `model` is a family ("vasicek", "cir", "icir", "cev", "nldrift") or a model preset ("vasicek0",
    "cir0", ...); a preset also supplies `theta` unless it is given explicitly.
    """

    model: str = "vasicek"
    theta: Optional[Dict[str, float]] = None
    data: Optional[str] = None
    delta: float = 1.0 / 12.0
    region: Union[str, Dict[str, float]] = "auto"
    bandwidths: Optional[List[float]] = None
    bandwidth_scheme: str = BandwidthScheme.REF_THIRD_SMALLEST.value
    n_bandwidths: int = 6
    ratio: float = 0.95
    h_min: Optional[float] = None
    h_max: Optional[float] = None
    reselect_bandwidths: Optional[bool] = None
    variant: str = Variant.LSEL.value
    mode: str = Mode.GRID.value
    grid: Tuple[int, int] = (40, 40)
    n_boot: Optional[int] = None
    alpha: float = 0.05
    seed: int = 0
    workers: int = 1
    euler_substeps: int = 20
    n: int = 125
    x0: Optional[float] = None
    output: Optional[str] = None
    preset: Optional[str] = None
    reps: Optional[int] = None
    full_scale: bool = False
    data_driven: bool = False
    asymptotic: bool = True
    rng: str = field(default=RNG_NAME, init=False)

    def __post_init__(self):
        """Normalize and validate every setting."""
        self.model = (self.model.value if isinstance(self.model, Family) else str(self.model)).lower()
        if self.model not in MODEL_PRESETS:
            try:
                Family(self.model)
            except ValueError:
                raise ConfigError(
                    f"Unknown model: {self.model}, available families {[f.value for f in Family]} "
                    f"and presets {list(MODEL_PRESETS)}"
                )
        if self.theta is not None:
            self.theta = {str(key): float(value) for key, value in _as_mapping(self.theta, "theta").items()}
        self.region = _region_setting(self.region)
        if self.bandwidths is not None:
            self.bandwidths = [float(h) for h in _as_list(self.bandwidths, "bandwidths")]
        self.grid = tuple(int(m) for m in _as_list(self.grid, "grid"))
        if len(self.grid) != 2 or min(self.grid) < 2:
            raise ConfigError(f"grid must be two integers >= 2, given: {self.grid}")
        for name, enum in (("bandwidth_scheme", BandwidthScheme), ("variant", Variant), ("mode", Mode)):
            value = getattr(self, name)
            try:
                setattr(self, name, enum(value).value)
            except ValueError:
                raise ConfigError(f"Invalid {name}: {value}, available: {[item.value for item in enum]}")
        self._check_numbers()

    def _check_numbers(self):
        try:
            self.delta = float(self.delta)
            self.ratio = float(self.ratio)
            self.alpha = float(self.alpha)
            for name in ("n_bandwidths", "seed", "workers", "euler_substeps", "n"):
                setattr(self, name, int(getattr(self, name)))
            for name in ("n_boot", "reps"):
                if getattr(self, name) is not None:
                    setattr(self, name, int(getattr(self, name)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Invalid numeric setting: {exc}")
        checks = [
            (self.delta > 0, f"delta must be positive, given: {self.delta}"),
            (0 < self.ratio < 1, f"ratio must lie in (0, 1), given: {self.ratio}"),
            (0 < self.alpha <= 1, f"alpha must lie in (0, 1], given: {self.alpha}"),
            (self.n_bandwidths >= 1, f"n_bandwidths must be positive, given: {self.n_bandwidths}"),
            (self.n_boot is None or self.n_boot >= 99, f"n_boot must be at least 99, given: {self.n_boot}"),
            (self.seed >= 0, f"seed must be non-negative, given: {self.seed}"),
            (self.workers == -1 or self.workers >= 1, f"workers must be -1 or positive, given: {self.workers}"),
            (self.euler_substeps >= 1, f"euler_substeps must be positive, given: {self.euler_substeps}"),
            (self.n >= 2, f"n must be at least 2, given: {self.n}"),
            (self.reps is None or self.reps >= 10, f"reps must be at least 10, given: {self.reps}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    @classmethod
    def from_dict(cls, settings: Dict[str, Any]) -> "Config":
        """Create a config, rejecting unknown keys."""
        known = {item.name for item in fields(cls) if item.init}
        unknown = set(settings) - known
        if unknown:
            raise ConfigError(f"Unknown configuration key(s): {sorted(unknown)}")
        return cls(**settings)

    @property
    def family(self) -> Family:
        """Model family."""
        return MODEL_PRESETS[self.model][0] if self.model in MODEL_PRESETS else Family(self.model)

    def get_model(self) -> DiffusionModel:
        """Model instance with the configured Euler sub-steps."""
        return get_model(self.family, euler_substeps=self.euler_substeps)

    def get_theta(self, model: Optional[DiffusionModel] = None) -> Optional[ParamVector]:
        """Configured parameters, falling back on the model preset; None when neither is given."""
        model = self.get_model() if model is None else model
        theta = self.theta
        if theta is None and self.model in MODEL_PRESETS:
            theta = MODEL_PRESETS[self.model][1]
        if theta is None:
            return None
        try:
            return model.params(theta)
        except DiffusionElError as exc:
            raise ConfigError(f"Invalid theta for {model.family.value}: {exc.error_message}")

    def get_region(self, path: Optional[ObservedPath] = None) -> Region:
        """Integration region; "auto" needs the path."""
        try:
            return get_region(self.region, path)
        except ValueError as exc:
            raise ConfigError(str(exc))

    def bandwidth_rule(self) -> BandwidthRule:
        """Bandwidth rule; explicit bandwidths select the fixed scheme."""
        scheme = BandwidthScheme(self.bandwidth_scheme)
        if self.bandwidths is not None:
            scheme = BandwidthScheme.FIXED
        elif scheme == BandwidthScheme.FIXED:
            raise ConfigError("The fixed bandwidth scheme needs the bandwidths key")
        elif scheme == BandwidthScheme.ENDPOINTS and (self.h_min is None or self.h_max is None):
            raise ConfigError("The endpoints bandwidth scheme needs h_min and h_max")
        return BandwidthRule(
            scheme=scheme,
            J=self.n_bandwidths,
            a=self.ratio,
            values=tuple(self.bandwidths) if self.bandwidths is not None else None,
            h_min=self.h_min,
            h_max=self.h_max,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Settings with the RNG identifier."""
        settings = asdict(self)
        settings["grid"] = list(self.grid)
        return settings

    @property
    def content_hash(self) -> str:
        """SHA-256 of the serialized settings."""
        return generate_content_hash(yaml.safe_dump(self.to_dict(), sort_keys=True))


def _as_mapping(value: Any, name: str) -> Dict[str, Any]:
    if isinstance(value, str):
        value = dict(item.split("=", 1) for item in value.replace(" ", "").split(",") if item)
    if not isinstance(value, dict):
        raise ConfigError(f"{name} must be a mapping, given: {value!r}")
    return value


def _as_list(value: Any, name: str) -> List[Any]:
    if isinstance(value, str):
        value = [item for item in value.replace("x", ",").replace(" ", "").split(",") if item]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{name} must be a list, given: {value!r}")
    return list(value)


def _region_setting(value: Any) -> Union[str, Dict[str, float]]:
    if isinstance(value, Region):
        return value.as_dict()
    if isinstance(value, str) and "," not in value:
        return value
    if isinstance(value, (str, list, tuple)):
        bounds = [float(item) for item in _as_list(value, "region")]
        if len(bounds) != 4:
            raise ConfigError(f"region needs u_min, u_max, v_min, v_max, given: {bounds}")
        value = dict(zip(("u_min", "u_max", "v_min", "v_max"), bounds))
    if isinstance(value, dict):
        try:
            return Region.from_dict({key: float(bound) for key, bound in value.items()}).as_dict()
        except ValueError as exc:
            raise ConfigError(f"Invalid region: {exc}")
    raise ConfigError(f"Invalid region: {value!r}")


class ConfigLoader:
    """Merge defaults, a flat YAML file and overrides into a `Config`; later sources win."""

    def __init__(
        self,
        file_path: Optional[Union[str, Path]] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ):
        """Initialize the ConfigLoader class.

        Parameters
        ----------
        file_path: str or Path, optional, default is None
            YAML file with one `key: value` entry per line.
        overrides: dict, optional, default is None
            Settings that win over the file (e.g. command-line flags); None values are ignored.
        """
        self._file_path = file_path
        self._file_settings = self.read_file(file_path) if file_path is not None else {}
        self._overrides = {key: value for key, value in (overrides or {}).items() if value is not None}
        self._config = self._build()

    def _build(self) -> Config:
        settings = dict(self._file_settings)
        settings.update(self._overrides)
        config = Config.from_dict(settings)
        logger.debug(f"Configuration: {config.to_dict()}")
        return config

    @staticmethod
    def read_file(file_path: Union[str, Path]) -> Dict[str, Any]:
        """Read a flat YAML mapping.

        Raises
        ------
        ConfigError
            If the file is missing or not a mapping.
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise ConfigError(f"The configuration file does not exist: {file_path}")
        try:
            content = yaml.safe_load(file_path.read_text())
        except yaml.YAMLError as exc:
            raise ConfigError(f"Cannot parse the configuration file {file_path}: {exc}")
        if content is None:
            return {}
        if not isinstance(content, dict):
            raise ConfigError(f"The configuration file must hold a key/value mapping: {file_path}")
        return content

    @property
    def config(self) -> Config:
        """Get the config."""
        return self._config

    @property
    def overrides(self) -> Dict[str, Any]:
        """Get the overrides."""
        return dict(self._overrides)

    @overrides.setter
    def overrides(self, value: Dict[str, Any]):
        self._overrides = {key: item for key, item in value.items() if item is not None}
        self._config = self._build()

    def update(self, **changes) -> Config:
        """Add overrides and rebuild the config."""
        self.overrides = {**self._overrides, **changes}
        return self._config
