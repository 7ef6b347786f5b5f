"""Integration regions: rectangles rotated 45 degrees anticlockwise around the origin.

A point (x, y) is mapped to the rotated coordinates u = (x + y)/sqrt(2), v = (y - x)/sqrt(2); the region
is a half-open rectangle [u_min, u_max) x [v_min, v_max) in (u, v).
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import DiffusionModel, ThetaLike

SQRT2 = np.sqrt(2.0)


def to_rotated(x, y) -> Tuple[np.ndarray, np.ndarray]:
    """Map (x, y) to the rotated coordinates (u, v)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (x + y) / SQRT2, (y - x) / SQRT2


def from_rotated(u, v) -> Tuple[np.ndarray, np.ndarray]:
    """Map rotated coordinates (u, v) back to (x, y)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (u - v) / SQRT2, (u + v) / SQRT2


@dataclass(frozen=True)
class Region:
    """Rotated rectangle S with the uniform weight omega = 1_S / |S|.

    Parameters
    ----------
    u_min, u_max: float
        Interval along the x = y diagonal (may be infinite).
    v_min, v_max: float
        Interval across the diagonal (may be infinite).

    Examples
    --------
    >>> region = Region(0.035, 0.25, -0.03, 0.03)
    >>> round(region.area, 6)
    0.0129
    >>> bool(region.contains(0.1425 / np.sqrt(2), 0.1425 / np.sqrt(2)))
    True
    """

    u_min: float
    u_max: float
    v_min: float
    v_max: float

    def __post_init__(self):
        """Validate the intervals."""
        for name in ("u_min", "u_max", "v_min", "v_max"):
            value = float(getattr(self, name))
            if np.isnan(value):
                raise ValueError(f"{name} must not be NaN")
            object.__setattr__(self, name, value)
        if self.u_max < self.u_min or self.v_max < self.v_min:
            raise ValueError(f"Region bounds are reversed: {self.as_dict()}")

    @property
    def area(self) -> float:
        """|S| (rotation preserves area)."""
        if self.is_empty:
            return 0.0
        return (self.u_max - self.u_min) * (self.v_max - self.v_min)

    @property
    def is_empty(self) -> bool:
        """True if one of the intervals is empty."""
        return self.u_max == self.u_min or self.v_max == self.v_min

    @property
    def is_bounded(self) -> bool:
        """True if all bounds are finite."""
        return bool(np.all(np.isfinite([self.u_min, self.u_max, self.v_min, self.v_max])))

    def contains(self, x, y):
        """Membership of (x, y) in S, half-open in the rotated coordinates."""
        u, v = to_rotated(x, y)
        inside = (u >= self.u_min) & (u < self.u_max) & (v >= self.v_min) & (v < self.v_max)
        return inside

    def uniform_weight(self, x, y):
        """omega(x, y) = 1/|S| inside the region and 0 outside."""
        inside = self.contains(x, y)
        if self.is_empty:
            return np.zeros_like(np.asarray(inside, dtype=float))
        weight = 1.0 / self.area
        out = np.where(inside, weight, 0.0)
        return float(out) if out.ndim == 0 else out

    @property
    def weight_square_integral(self) -> float:
        """Integral of omega^2 over the plane, 1/|S|."""
        return 1.0 / self.area

    def grid_over(self, m_u: int = 40, m_v: int = 40) -> Tuple[np.ndarray, np.ndarray]:
        """Midpoint grid in the rotated coordinates mapped to (x, y).

        Parameters
        ----------
        m_u, m_v: int, optional, default is 40
            Number of cells along each rotated axis (at least 2).

        Returns
        -------
        points: numpy.ndarray
            (m_u * m_v, 2) array of (x, y) cell midpoints.
        cell_area: numpy.ndarray
            Area of each cell; the areas sum to |S|.

        Examples
        --------
        >>> points, cell_area = Region(0.0, 1.0, -1.0, 1.0).grid_over(2, 2)
        >>> points.shape, float(cell_area.sum())
        ((4, 2), 2.0)
        """
        if m_u < 2 or m_v < 2:
            raise ValueError(f"The grid needs at least 2 cells per axis, given: ({m_u}, {m_v})")
        if not self.is_bounded:
            raise ValueError("A grid needs a bounded region")
        du = (self.u_max - self.u_min) / m_u
        dv = (self.v_max - self.v_min) / m_v
        u = self.u_min + du * (np.arange(m_u) + 0.5)
        v = self.v_min + dv * (np.arange(m_v) + 0.5)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        x, y = from_rotated(uu.ravel(), vv.ravel())
        return np.column_stack([x, y]), np.full(m_u * m_v, du * dv)

    def coverage_probability(
        self,
        model: DiffusionModel,
        theta: ThetaLike,
        delta: float,
        n_mc: int,
        rng: np.random.Generator,
    ) -> Tuple[float, float]:
        """Fraction of consecutive pairs of a simulated stationary path falling in S.

        Returns
        -------
        tuple
            (probability, standard error); the standard error is the binomial one and ignores the serial
            dependence of the pairs.
        """
        if n_mc < 1000:
            raise ValueError(f"n_mc must be at least 1000, given: {n_mc}")
        x0 = float(model.sample_stationary(theta, rng))
        path = model.simulate_path(theta, n_mc, delta, x0, rng)
        hits = np.asarray(self.contains(path.x, path.y), dtype=float)
        p = float(hits.mean())
        return p, float(np.sqrt(p * (1 - p) / n_mc))

    def as_dict(self) -> Dict[str, float]:
        """Bounds as a mapping."""
        return {"u_min": self.u_min, "u_max": self.u_max, "v_min": self.v_min, "v_max": self.v_max}

    @classmethod
    def from_dict(cls, bounds: Dict[str, float]) -> "Region":
        """Create a region from a `{u_min, u_max, v_min, v_max}` mapping."""
        missing = {"u_min", "u_max", "v_min", "v_max"} - set(bounds)
        if missing:
            raise ValueError(f"Region bounds are missing: {sorted(missing)}")
        return cls(bounds["u_min"], bounds["u_max"], bounds["v_min"], bounds["v_max"])

    @classmethod
    def plane(cls) -> "Region":
        """The whole plane."""
        return cls(-np.inf, np.inf, -np.inf, np.inf)

    @classmethod
    def auto(cls, path: ObservedPath, coverage: float = 0.95) -> "Region":
        """Rotated bounding box of the middle `coverage` share of the rotated pair coordinates."""
        u, v = to_rotated(path.x, path.y)
        tail = 50.0 * (1.0 - coverage)
        u_lo, u_hi = np.percentile(u, [tail, 100 - tail])
        v_lo, v_hi = np.percentile(v, [tail, 100 - tail])
        return cls(float(u_lo), float(u_hi), float(v_lo), float(v_hi))


REGION_PRESETS: Dict[str, Region] = {
    "vasicek-2": Region(0.035, 0.25, -0.03, 0.03),
    "vasicek0": Region(0.03, 0.22, -0.02, 0.02),
    "vasicek2": Region(0.02, 0.22, -0.009, 0.009),
    "cir0": Region(0.015, 0.25, -0.015, 0.015),
    "cir1": Region(0.015, 0.25, -0.012, 0.012),
    "cir2": Region(0.015, 0.25, -0.008, 0.008),
    "case-study": Region(0.005, 0.4, -0.03, 0.03),
}


def get_region(spec: Union[str, Dict[str, float], Region], path: Optional[ObservedPath] = None) -> Region:
    """Resolve a region from a preset name, a bounds mapping, or "auto" (needs `path`)."""
    if isinstance(spec, Region):
        return spec
    if isinstance(spec, dict):
        return Region.from_dict(spec)
    if spec == "auto":
        if path is None:
            raise ValueError("The automatic region needs the observed path")
        return Region.auto(path)
    if spec not in REGION_PRESETS:
        raise ValueError(f"Unknown region preset: {spec}, available: {list(REGION_PRESETS)}")
    return REGION_PRESETS[spec]
