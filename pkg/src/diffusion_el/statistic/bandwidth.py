"""Bandwidth selection and the geometric bandwidth set."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from diffusion_el.models.path import ObservedPath
from diffusion_el.smoothing.kernel import BIWEIGHT, Kernel
from diffusion_el.utils.errors import EstimationError

logger = logging.getLogger(__name__)

MAX_UNDEFINED_SHARE = 0.05


class BandwidthScheme(str, Enum):
    """How a bandwidth set is built."""

    FIXED = "fixed"
    CV_LOWER_RANGE = "cv-lower-range"
    REF_THIRD_SMALLEST = "ref-third-smallest"
    ENDPOINTS = "endpoints"


@dataclass(frozen=True, eq=False)
class BandwidthSet:
    """Bandwidths h_1 < ... < h_J with h_k / h_{k+1} = a.

    Sets given verbatim (`FIXED`) may be only approximately geometric; `is_geometric` tells which.

    Examples
    --------
    >>> bandwidths = BandwidthSet.geometric(0.01, 0.5, 3)
    >>> bandwidths.values.tolist()
    [0.0025, 0.005, 0.01]
    >>> bandwidths.J
    3
    """

    values: np.ndarray
    ratio: Optional[float] = None
    is_geometric: bool = field(default=True)

    def __post_init__(self):
        """Validate the bandwidths."""
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise ValueError("A bandwidth set needs at least one bandwidth")
        if np.any(~(values > 0)) or np.any(~np.isfinite(values)):
            raise ValueError(f"Bandwidths must be positive and finite, given: {values.tolist()}")
        if np.any(np.diff(values) <= 0):
            raise ValueError(f"Bandwidths must be strictly increasing, given: {values.tolist()}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.size > 1:
            ratios = values[:-1] / values[1:]
            ratio = float((values[0] / values[-1]) ** (1.0 / (values.size - 1))) if self.ratio is None else self.ratio
            geometric = bool(np.all(np.abs(ratios - ratio) <= 1e-9))
            if self.is_geometric and not geometric:
                raise ValueError(f"Bandwidths {values.tolist()} are not geometric with ratio {ratio}")
            object.__setattr__(self, "ratio", float(ratio))
            object.__setattr__(self, "is_geometric", geometric)

    def __len__(self) -> int:
        """J."""
        return self.values.size

    def __iter__(self):
        """Iterate over the bandwidths."""
        return iter(self.values.tolist())

    def __repr__(self) -> str:
        """String representation."""
        return f"BandwidthSet({[round(h, 6) for h in self.values.tolist()]}, a={self.ratio})"

    @property
    def J(self) -> int:  # noqa: N802
        """Number of bandwidths."""
        return self.values.size

    @classmethod
    def geometric(cls, top: float, ratio: float, size: int) -> "BandwidthSet":
        """Set with largest bandwidth `top` and h_k = ratio * h_{k+1}."""
        if not 0 < ratio < 1:
            raise ValueError(f"The ratio must lie in (0, 1), given: {ratio}")
        values = top * ratio ** np.arange(size - 1, -1, -1)
        return cls(values, ratio if size > 1 else None)

    def to_dict(self) -> dict:
        """Serializable representation."""
        return {"values": self.values.tolist(), "ratio": self.ratio, "is_geometric": self.is_geometric}


def scott_rule(path: ObservedPath) -> float:
    """Reference bandwidth s n^{-1/6}, s the sample standard deviation of the observations.

    Examples
    --------
    >>> path = ObservedPath(np.tile([-1.0, 1.0], 33)[:65], delta=1.0)
    >>> round(scott_rule(path) / np.std(path.values, ddof=1), 12)
    0.5
    """
    if path.n < 10:
        raise ValueError(f"The Scott rule needs at least 10 transitions, given: {path.n}")
    scale = float(np.std(path.values, ddof=1))
    if not scale > 0:
        raise EstimationError("The observations have zero variance")
    return scale * path.n ** (-1.0 / 6.0)


def cv_criterion(path: ObservedPath, h: float, kernel: Kernel = BIWEIGHT) -> float:
    """Least-squares cross-validation criterion of the conditional density estimator.

    CV(h) = mean_t int p_{-t}(y|X_t)^2 dy - 2 mean_t p_{-t}(X_{t+1}|X_t), where p_{-t} leaves out the
    pairs t-1, t and t+1. The squared integral uses int K_h(y - a) K_h(y - b) dy = K^(2)((a - b)/h, 1)/h.
    Terms whose window is empty are dropped; the criterion is infinite when more than 5% are.
    """
    if not h > 0:
        raise ValueError(f"The bandwidth must be positive, given: {h}")
    x, y = path.x, path.y
    n = x.size
    index = np.arange(n)
    kx = kernel.scaled(x[:, None] - x[None, :], h)
    kx[np.abs(index[:, None] - index[None, :]) <= 1] = 0.0
    total = kx.sum(axis=1)
    defined = total > 0
    if (~defined).sum() > MAX_UNDEFINED_SHARE * n:
        return np.inf
    ky = kernel.scaled(y[:, None] - y[None, :], h)
    diff = (y[:, None] - y[None, :]) / h
    close = np.abs(diff) < 2.0
    convolution = np.zeros_like(diff)
    convolution[close] = kernel.k2(diff[close], 1.0) / h
    kx, total = kx[defined], total[defined]
    square = np.einsum("ij,jk,ik->i", kx, convolution, kx) / total**2
    fitted = (kx * ky[defined]).sum(axis=1) / total
    return float(np.mean(square - 2.0 * fitted))


def default_cv_grid(path: ObservedPath, size: int = 30) -> np.ndarray:
    """Geometric grid from 0.1 to 2 times the Scott bandwidth."""
    return scott_rule(path) * np.geomspace(0.1, 2.0, size)


def cv_select(
    path: ObservedPath, h_grid: Optional[Sequence[float]] = None, kernel: Kernel = BIWEIGHT
) -> float:
    """Bandwidth minimizing the cross-validation criterion over a grid.

    Raises
    ------
    EstimationError
        If the criterion is not finite anywhere on the grid.
    """
    if path.n < 20:
        raise ValueError(f"Cross-validation needs at least 20 transitions, given: {path.n}")
    h_grid = default_cv_grid(path) if h_grid is None else np.asarray(h_grid, dtype=float)
    if h_grid.size == 0:
        raise ValueError("The bandwidth grid is empty")
    scores = np.array([cv_criterion(path, h, kernel) for h in h_grid])
    finite = np.isfinite(scores)
    if not np.any(finite):
        raise EstimationError("The cross-validation criterion is not finite for any bandwidth")
    best = h_grid[finite][np.argmin(scores[finite])]
    logger.debug(f"CV bandwidth {best:.6g} over {finite.sum()} finite criteria")
    return float(best)


def build_set(
    anchor: Optional[float] = None,
    scheme: Union[str, BandwidthScheme] = BandwidthScheme.REF_THIRD_SMALLEST,
    J: int = 6,  # noqa: N803
    a: float = 0.95,
    h_min: Optional[float] = None,
    h_max: Optional[float] = None,
    values: Optional[Sequence[float]] = None,
) -> BandwidthSet:
    """Build a bandwidth set.

    Parameters
    ----------
    anchor: float, optional
        Anchor bandwidth (Scott or CV bandwidth).
    scheme: str or BandwidthScheme, optional, default is "ref-third-smallest"
        "cv-lower-range" puts the anchor at position 2, "ref-third-smallest" at position 3,
        "endpoints" spans [h_min, h_max] with a = (h_min / h_max)^{1/(J-1)}, "fixed" takes `values`.
    J: int, optional, default is 6
        Number of bandwidths.
    a: float, optional, default is 0.95
        Ratio h_k / h_{k+1}.
    h_min, h_max: float, optional
        Endpoints for the "endpoints" scheme.
    values: sequence of float, optional
        Bandwidths for the "fixed" scheme.

    Returns
    -------
    BandwidthSet

    Examples
    --------
    >>> [round(h, 6) for h in build_set(0.01, "ref-third-smallest", J=6, a=0.95)]
    [0.009025, 0.0095, 0.01, 0.010526, 0.01108, 0.011664]
    >>> round(build_set(scheme="endpoints", J=7, h_min=0.007, h_max=0.020).ratio, 5)
    0.83948
    """
    scheme = BandwidthScheme(scheme)
    if scheme == BandwidthScheme.FIXED:
        if values is None:
            raise ValueError("The fixed scheme needs explicit bandwidths")
        return BandwidthSet(np.sort(np.asarray(values, dtype=float)), is_geometric=False)
    if J < 1:
        raise ValueError(f"J must be a positive integer, given: {J}")
    if scheme == BandwidthScheme.ENDPOINTS:
        if h_min is None or h_max is None or not 0 < h_min <= h_max:
            raise ValueError(f"The endpoints scheme needs 0 < h_min <= h_max, given: ({h_min}, {h_max})")
        if J == 1:
            if h_min != h_max:
                raise ValueError("A single bandwidth cannot span two different endpoints")
            return BandwidthSet([h_min])
        ratio = (h_min / h_max) ** (1.0 / (J - 1))
        return BandwidthSet.geometric(h_max, ratio, J)
    if anchor is None or not anchor > 0:
        raise ValueError(f"The {scheme.value} scheme needs a positive anchor bandwidth, given: {anchor}")
    if J == 1:
        return BandwidthSet([anchor])
    if not 0 < a < 1:
        raise ValueError(f"The ratio must lie in (0, 1), given: {a}")
    position = min(2 if scheme == BandwidthScheme.CV_LOWER_RANGE else 3, J)
    return BandwidthSet.geometric(anchor / a ** (J - position), a, J)


@dataclass(frozen=True)
class BandwidthRule:
    """Recipe that turns a path into a bandwidth set.

    The "cv-lower-range" and "ref-third-smallest" schemes are data driven: the anchor comes from the path
    (CV or Scott bandwidth), so every sample gets its own set.
    """

    scheme: BandwidthScheme = BandwidthScheme.REF_THIRD_SMALLEST
    J: int = 6  # noqa: N815
    a: float = 0.95
    values: Optional[Tuple[float, ...]] = None
    h_min: Optional[float] = None
    h_max: Optional[float] = None

    def __post_init__(self):
        """Normalize the fields."""
        object.__setattr__(self, "scheme", BandwidthScheme(self.scheme))
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(h) for h in self.values))

    @property
    def data_driven(self) -> bool:
        """True if the set depends on the path."""
        return self.scheme in (BandwidthScheme.CV_LOWER_RANGE, BandwidthScheme.REF_THIRD_SMALLEST)

    def select(self, path: ObservedPath) -> BandwidthSet:
        """Bandwidth set for a path."""
        anchor = None
        if self.scheme == BandwidthScheme.REF_THIRD_SMALLEST:
            anchor = scott_rule(path)
        elif self.scheme == BandwidthScheme.CV_LOWER_RANGE:
            anchor = cv_select(path)
        return build_set(anchor, self.scheme, self.J, self.a, self.h_min, self.h_max, self.values)


BANDWIDTH_PRESETS: Dict[str, Dict[int, Tuple[float, ...]]] = {
    "vasicek-2": {
        125: (0.030, 0.032, 0.034, 0.036, 0.0386, 0.041),
        250: (0.022, 0.023, 0.024, 0.026, 0.0269, 0.0284),
        500: (0.02, 0.021, 0.022, 0.023, 0.0245, 0.0258),
    },
    "vasicek0": {
        125: (0.016, 0.017, 0.019, 0.020, 0.022, 0.024),
        250: (0.014, 0.015, 0.017, 0.018, 0.02, 0.022),
        500: (0.01, 0.011, 0.012, 0.013, 0.015, 0.016),
    },
    "vasicek2": {
        125: (0.008, 0.009, 0.010, 0.011, 0.013, 0.014),
        250: (0.006, 0.007, 0.008, 0.009, 0.01, 0.011),
        500: (0.004, 0.005, 0.0054, 0.0063, 0.0074, 0.0086),
    },
    "cir0": {
        125: (0.022, 0.025, 0.029, 0.033, 0.038, 0.044),
        250: (0.018, 0.021, 0.024, 0.028, 0.032, 0.037),
        500: (0.016, 0.018, 0.021, 0.024, 0.027, 0.031),
    },
    "cir1": {
        125: (0.017, 0.02, 0.022, 0.026, 0.03, 0.035),
        250: (0.014, 0.016, 0.018, 0.021, 0.024, 0.028),
        500: (0.012, 0.014, 0.016, 0.018, 0.021, 0.024),
    },
    "cir2": {
        125: (0.012, 0.014, 0.016, 0.018, 0.021, 0.024),
        250: (0.01, 0.012, 0.013, 0.015, 0.017, 0.02),
        500: (0.008, 0.009, 0.011, 0.012, 0.014, 0.016),
    },
    "power-cir0-vasicek": {
        125: (0.0199, 0.0219, 0.0241, 0.0265, 0.0291),
        250: (0.0141, 0.0158, 0.0177, 0.0199, 0.0223),
        500: (0.0113, 0.0126, 0.0141, 0.0157, 0.0175),
    },
}


def preset_bandwidths(name: str, n: int) -> BandwidthSet:
    """Fixed bandwidth set of a design for the sample size n (125, 250 or 500)."""
    if name not in BANDWIDTH_PRESETS:
        raise ValueError(f"Unknown bandwidth preset: {name}, available: {list(BANDWIDTH_PRESETS)}")
    if n not in BANDWIDTH_PRESETS[name]:
        raise ValueError(f"The preset {name} has no bandwidths for n={n}, available: {list(BANDWIDTH_PRESETS[name])}")
    return build_set(scheme=BandwidthScheme.FIXED, values=BANDWIDTH_PRESETS[name][n])
