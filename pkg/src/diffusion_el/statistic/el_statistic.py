"""Local empirical likelihood ratios and the global test statistics N(h) and L_n.

At a point (x, y) the kernel pair products A_t = K_h(x - X_t) K_h(y - X_{t+1}), t = 1..n, are compared
with the double-smoothed parametric joint density (the target) through the deviations T_t = A_t - target.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import DiffusionModel, ThetaLike
from diffusion_el.smoothing.estimators import GridSmoother, parametric_transition_matrix
from diffusion_el.smoothing.kernel import BIWEIGHT, Kernel
from diffusion_el.statistic.region import Region
from diffusion_el.utils.errors import ConvexHullError

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-14
ROOT_TOL = 1e-12
MAX_NEWTON_ITER = 200
# points whose kernel window holds fewer effective pairs are left out of N(h)
MIN_EFFECTIVE_PAIRS = 5.0


class Variant(str, Enum):
    """Local discrepancy: empirical likelihood or its least-squares version."""

    EL = "el"
    LSEL = "lsel"


class Mode(str, Enum):
    """Integration of the local ratios: grid Riemann sum over S or average over the observed pairs."""

    GRID = "grid"
    DATA = "data"


@dataclass
class LocalELResult:
    """Local empirical likelihood at one point.

    Attributes
    ----------
    lambda_: float
        Lagrange multiplier.
    ratio: float
        Log-EL ratio 2 sum log(1 + lambda T_t).
    weights_ok: bool
        All q_t = 1 / (n (1 + lambda T_t)) positive and the root found.
    constraint_residual: float
        |sum q_t T_t| at the returned multiplier.
    """

    lambda_: float
    ratio: float
    weights_ok: bool
    constraint_residual: float

    def weights(self, deviations: np.ndarray) -> np.ndarray:
        """The EL weights q_t for the deviations the result was computed from."""
        deviations = np.asarray(deviations, dtype=float)
        return 1.0 / (deviations.size * (1.0 + self.lambda_ * deviations))


def hull_cap(n: int) -> float:
    """Local ratio assigned when the target lies outside the convex hull of the pair products."""
    return 2.0 * n * np.log(n)


def _balanced(deviations: np.ndarray) -> np.ndarray:
    """Rows whose deviations sum to zero up to rounding."""
    total = np.abs(deviations.sum(axis=1))
    return total <= ZERO_TOL * np.maximum(np.abs(deviations).sum(axis=1), np.finfo(float).tiny)


def solve_lambda(deviations: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve sum_t T_t / (1 + lambda T_t) = 0 for every row of a deviation matrix.

    Safeguarded Newton iterations inside the bracket (-1/max T, -1/min T) where the left side decreases
    monotonically; a Newton step leaving the bracket is replaced by bisection. The iterations stop when the
    residual is below 1e-12 n max|T| and the weight sum error |sum q_t - 1| is below 1e-12.

    Parameters
    ----------
    deviations: numpy.ndarray
        (G, n) deviations T_t.

    Returns
    -------
    lam: numpy.ndarray
        Multipliers (NaN for rows outside the convex hull).
    inside_hull: numpy.ndarray
        True where 0 lies strictly inside the range of the row.
    converged: numpy.ndarray
        True where the residual tolerance was met.
    """
    deviations = np.atleast_2d(np.asarray(deviations, dtype=float))
    rows, n = deviations.shape
    t_max = deviations.max(axis=1)
    t_min = deviations.min(axis=1)
    zero = np.all(deviations == 0, axis=1) | _balanced(deviations)
    inside = (t_min < 0) & (t_max > 0)
    lam = np.zeros(rows)
    converged = zero.copy()
    active = inside & ~zero
    if not np.any(active):
        lam[~inside & ~zero] = np.nan
        return lam, inside | zero, converged

    dev = deviations[active]
    scale = np.abs(dev).max(axis=1)
    lo = -1.0 / dev.max(axis=1)
    hi = -1.0 / dev.min(axis=1)
    current = np.zeros(dev.shape[0])
    done = np.zeros(dev.shape[0], dtype=bool)
    tol = ROOT_TOL * n * scale
    for _ in range(MAX_NEWTON_ITER):
        denom = 1.0 + current[:, None] * dev
        g = (dev / denom).sum(axis=1)
        # |sum q_t - 1| = |lambda g| / n
        done |= np.abs(g) <= tol / np.maximum(1.0, np.abs(current) * scale)
        if np.all(done):
            break
        slope = -((dev / denom) ** 2).sum(axis=1)
        lo = np.where(g > 0, np.maximum(lo, current), lo)
        hi = np.where(g < 0, np.minimum(hi, current), hi)
        step = current - g / slope
        bisect = ~((step > lo) & (step < hi)) | ~np.isfinite(step)
        step = np.where(bisect, 0.5 * (lo + hi), step)
        stalled = step == current
        done |= stalled
        current = np.where(done, current, step)

    lam[active] = current
    converged[active] = done
    lam[~inside & ~zero] = np.nan
    return lam, inside | zero, converged


def el_ratio_from_deviations(deviations) -> LocalELResult:
    """Local EL ratio from the deviations T_t at one point.

    Examples
    --------
    >>> el_ratio_from_deviations([0.5, -0.3, -0.2]).ratio
    0.0

    Raises
    ------
    ConvexHullError
        If 0 is not strictly inside the range of the deviations.
    """
    deviations = np.asarray(deviations, dtype=float).ravel()
    lam, inside, converged = solve_lambda(deviations[None, :])
    if not inside[0]:
        raise ConvexHullError(
            f"The target lies outside the convex hull of the kernel pair products "
            f"(min T={deviations.min():.6g}, max T={deviations.max():.6g})"
        )
    lam = float(lam[0])
    if lam == 0.0:
        return LocalELResult(0.0, 0.0, True, abs(float(deviations.sum())) / deviations.size)
    denom = 1.0 + lam * deviations
    ratio = float(2.0 * np.log(denom).sum())
    residual = abs(float((deviations / denom).sum())) / deviations.size
    return LocalELResult(lam, max(ratio, 0.0), bool(converged[0] and np.all(denom > 0)), residual)


def lsel_from_deviations(deviations) -> float:
    """Least-squares EL ratio T^2 / S with T = sum T_t and S = sum T_t^2 (0 when S = 0).

    Examples
    --------
    >>> round(lsel_from_deviations([1.0, 2.0, 3.0]), 6)
    2.571429
    """
    return float(_lsel_rows(np.atleast_2d(np.asarray(deviations, dtype=float)))[0])


def lsel_exact_from_deviations(deviations) -> float:
    """Exact minimum of sum (n q_t - 1)^2 under sum q_t = 1 and sum q_t T_t = 0.

    It equals T^2 / (S - T^2 / n), which agrees with `lsel_from_deviations` to first order.
    """
    deviations = np.asarray(deviations, dtype=float).ravel()
    total = deviations.sum()
    if _balanced(deviations[None, :])[0]:
        return 0.0
    centered = np.sum((deviations - deviations.mean()) ** 2)
    if centered <= 0:
        raise ConvexHullError("All deviations are equal and nonzero, the constraints have no solution")
    return float(total**2 / centered)


def _lsel_rows(deviations: np.ndarray) -> np.ndarray:
    total = deviations.sum(axis=1)
    total = np.where(_balanced(deviations), 0.0, total)
    square = (deviations**2).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(square > 0, total**2 / square, 0.0)


def local_ratios(deviations: np.ndarray, variant: Union[str, Variant] = Variant.LSEL) -> Tuple[np.ndarray, int]:
    """Local ratios for every row of a deviation matrix.

    Rows outside the convex hull get the cap 2 n log n under the EL variant.

    Returns
    -------
    ratios: numpy.ndarray
    hull_errors: int
        Number of capped rows.
    """
    variant = Variant(variant)
    deviations = np.atleast_2d(deviations)
    if variant == Variant.LSEL:
        return _lsel_rows(deviations), 0
    lam, inside, _ = solve_lambda(deviations)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = 2.0 * np.log1p(lam[:, None] * deviations).sum(axis=1)
    ratios = np.where(lam == 0, 0.0, np.maximum(ratios, 0.0))
    hull_errors = int((~inside).sum())
    ratios[~inside] = hull_cap(deviations.shape[1])
    return ratios, hull_errors


def _deviations_at(path: ObservedPath, h: float, target: float, x: float, y: float, kernel: Kernel) -> np.ndarray:
    smoother = GridSmoother(path, h, np.array([[x, y]]), kernel)
    return smoother.pair_products[0] - target


def el_ratio(
    path: ObservedPath, h: float, target: float, x: float, y: float, kernel: Kernel = BIWEIGHT
) -> LocalELResult:
    """Local EL ratio at (x, y) for the joint-density target p_tilde(y|x) pi_hat(x).

    Raises
    ------
    ConvexHullError
        If the target is outside the convex hull of the kernel pair products.
    """
    return el_ratio_from_deviations(_deviations_at(path, h, target, x, y, kernel))


def lsel_ratio(path: ObservedPath, h: float, target: float, x: float, y: float, kernel: Kernel = BIWEIGHT) -> float:
    """Local least-squares EL ratio T^2 / S at (x, y)."""
    return lsel_from_deviations(_deviations_at(path, h, target, x, y, kernel))


def lsel_ratio_exact(
    path: ObservedPath, h: float, target: float, x: float, y: float, kernel: Kernel = BIWEIGHT
) -> float:
    """Exact two-constraint least-squares EL minimum at (x, y)."""
    return lsel_exact_from_deviations(_deviations_at(path, h, target, x, y, kernel))


def studentized_ratio(deviations, h: float) -> float:
    """Leading term n h^2 U1^2 / U2 of the local EL ratio with U_r = (n h^2)^{-1} sum T_t^r.

    It matches the EL ratio when |lambda| max |T_t| is small; the multiplier is then close to U1 / U2.

    Examples
    --------
    >>> round(studentized_ratio([0.3, -0.1, 0.1], h=0.5), 6)
    0.818182
    """
    if not h > 0:
        raise ValueError(f"The bandwidth must be positive, given: {h}")
    deviations = np.asarray(deviations, dtype=float).ravel()
    scale = deviations.size * h**2
    u1 = deviations.sum() / scale
    u2 = np.sum(deviations**2) / scale
    return float(scale * u1**2 / u2) if u2 > 0 else 0.0


def studentized_discrepancy(
    p_hat: np.ndarray, p_tilde: np.ndarray, pi_hat: np.ndarray, n: int, h: float, kernel: Kernel = BIWEIGHT
) -> np.ndarray:
    """n h^2 (p_hat - p_tilde)^2 / V with V = R(K)^2 p_hat(y|x) / pi_hat(x), the plug-in local statistic."""
    with np.errstate(divide="ignore", invalid="ignore"):
        variance = kernel.R**2 * np.asarray(p_hat) / np.asarray(pi_hat)
        out = n * h**2 * (np.asarray(p_hat) - np.asarray(p_tilde)) ** 2 / variance
    return np.where(variance > 0, out, 0.0)


@dataclass
class BandwidthStatistic:
    """N(h) for one bandwidth with its diagnostics."""

    h: float
    N: float  # noqa: N815
    hull_errors: int = 0
    degenerate_windows: int = 0
    points: int = 0
    sparse_points: int = 0

    @property
    def standardized(self) -> float:
        """(N(h) - 1) / (sqrt(2) h)."""
        return (self.N - 1.0) / (np.sqrt(2.0) * self.h)


def l_n(per_h: Sequence[Tuple[float, float]]) -> float:
    """L_n = max_k (N(h_k) - 1) / (sqrt(2) h_k).

    Examples
    --------
    >>> round(l_n([(0.01, 1.1)]), 4)
    7.0711
    """
    if len(per_h) == 0:
        raise ValueError("L_n needs at least one bandwidth")
    values = []
    for h, value in per_h:
        if not h > 0:
            raise ValueError(f"Bandwidths must be positive, given: {h}")
        values.append((value - 1.0) / (np.sqrt(2.0) * h))
    return float(np.max(values))


def _grid_points(region: Region, grid: Union[Tuple[int, int], Tuple[np.ndarray, np.ndarray]]):
    first, second = grid
    if np.ndim(first) == 0:
        return region.grid_over(int(first), int(second))
    return np.asarray(first, dtype=float), np.asarray(second, dtype=float)


def bandwidth_statistic(
    path: ObservedPath,
    h: float,
    theta: ThetaLike,
    model: DiffusionModel,
    region: Region,
    variant: Union[str, Variant] = Variant.LSEL,
    mode: Union[str, Mode] = Mode.GRID,
    grid: Union[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = (40, 40),
    transition_matrix: Optional[np.ndarray] = None,
    kernel: Kernel = BIWEIGHT,
    min_effective_pairs: float = MIN_EFFECTIVE_PAIRS,
) -> BandwidthStatistic:
    """N(h) with its diagnostics, in the grid-integral or data-average form.

    The local ratios are integrated over the part of S where the data support the kernel estimate: a point
    counts when its window holds at least `min_effective_pairs` effective pairs (sum A_t)^2 / sum A_t^2.
    Elsewhere the local ratio tends to n whatever the model, so such points are dropped and the weights of
    the remaining points are rescaled to the total weight of S.

    Parameters
    ----------
    path: ObservedPath
        Observed path.
    h: float
        Bandwidth.
    theta: ParamVector, sequence or mapping
        Fitted parameters.
    model: DiffusionModel
        Null model.
    region: Region
        Integration region with the uniform weight.
    variant: str or Variant, optional, default is "lsel"
        Local ratio.
    mode: str or Mode, optional, default is "grid"
        "grid" for the Riemann sum over S, "data" for the average over the observed pairs in S.
    grid: tuple, optional, default is (40, 40)
        (m_u, m_v) cells or precomputed (points, cell_area).
    transition_matrix: numpy.ndarray, optional
        Precomputed p_theta(X_s | X_t) matrix (shared across bandwidths).
    kernel: Kernel, optional
        Smoothing kernel.
    min_effective_pairs: float, optional, default is 5
        Support threshold of a point; 0 keeps every point with a nonempty window.

    Returns
    -------
    BandwidthStatistic
    """
    mode = Mode(mode)
    if transition_matrix is None:
        transition_matrix = parametric_transition_matrix(model, theta, path)
    if mode == Mode.GRID:
        points, cell_area = _grid_points(region, grid)
        weights = np.asarray(region.uniform_weight(points[:, 0], points[:, 1])) * cell_area
    else:
        pairs = path.pairs()
        inside = np.asarray(region.contains(pairs[:, 0], pairs[:, 1]), dtype=bool)
        points = pairs[inside]
        if points.shape[0] == 0:
            return BandwidthStatistic(h=float(h), N=0.0)
        weights = np.asarray(region.uniform_weight(points[:, 0], points[:, 1])) / path.n

    smoother = GridSmoother(path, h, points, kernel)
    effective = smoother.effective_pairs
    supported = (effective > 0) & (effective >= min_effective_pairs)
    sparse_points = int(np.count_nonzero((weights > 0) & ~supported))
    kept_weight = float(weights[supported].sum())
    if kept_weight <= 0:
        logger.warning(f"No point of the region is supported by the data at h={h:.6g}")
        return BandwidthStatistic(h=float(h), N=0.0, points=int(points.shape[0]), sparse_points=sparse_points)

    smoother = GridSmoother(path, h, points[supported], kernel)
    deviations = smoother.pair_products - smoother.target_joint(transition_matrix)[:, None]
    ratios, hull_errors = local_ratios(deviations, variant)
    value = float(np.sum(ratios * weights[supported]) * weights.sum() / kept_weight)
    if hull_errors:
        logger.warning(f"{hull_errors} local ratio(s) capped at h={h:.6g} (target outside the convex hull)")
    if sparse_points:
        logger.debug(f"{sparse_points} sparse point(s) left out at h={h:.6g}")
    return BandwidthStatistic(
        h=float(h),
        N=value,
        hull_errors=hull_errors,
        degenerate_windows=smoother.degenerate_windows,
        points=int(points.shape[0]),
        sparse_points=sparse_points,
    )


def n_of_h_grid(
    path: ObservedPath,
    h: float,
    theta: ThetaLike,
    model: DiffusionModel,
    region: Region,
    grid: Union[Tuple[int, int], Tuple[np.ndarray, np.ndarray]] = (40, 40),
    variant: Union[str, Variant] = Variant.LSEL,
    **kwargs,
) -> float:
    """N(h) as a Riemann sum of the local ratios times omega over the region grid."""
    return bandwidth_statistic(path, h, theta, model, region, variant, Mode.GRID, grid, **kwargs).N


def n_of_h_data(
    path: ObservedPath,
    h: float,
    theta: ThetaLike,
    model: DiffusionModel,
    region: Region,
    variant: Union[str, Variant] = Variant.LSEL,
    **kwargs,
) -> float:
    """N(h) = n^{-1} sum_t ell(X_t, X_{t+1}) omega_1(X_t, X_{t+1}) over the observed pairs."""
    return bandwidth_statistic(path, h, theta, model, region, variant, Mode.DATA, **kwargs).N


@dataclass
class TestStatistics:
    """N(h_k) over a bandwidth set and the max statistic L_n."""

    __test__ = False

    per_h: List[BandwidthStatistic]
    mode: Mode
    statistic_variant: Variant
    L_n: float = field(init=False)  # noqa: N815

    def __post_init__(self):
        """Compute L_n."""
        self.L_n = l_n([(item.h, item.N) for item in self.per_h])

    @property
    def bandwidths(self) -> np.ndarray:
        """h_1, ..., h_J."""
        return np.array([item.h for item in self.per_h])

    @property
    def standardized(self) -> np.ndarray:
        """(N(h_k) - 1) / (sqrt(2) h_k) for every k."""
        return np.array([item.standardized for item in self.per_h])

    @property
    def hull_errors(self) -> int:
        """Total number of capped local ratios."""
        return int(sum(item.hull_errors for item in self.per_h))

    def to_frame(self) -> pd.DataFrame:
        """Per-bandwidth rows (h, N_h, standardized, hull_error_count, degenerate_windows, sparse_points)."""
        return pd.DataFrame(
            {
                "h": self.bandwidths,
                "N_h": [item.N for item in self.per_h],
                "standardized": self.standardized,
                "hull_error_count": [item.hull_errors for item in self.per_h],
                "degenerate_windows": [item.degenerate_windows for item in self.per_h],
                "sparse_points": [item.sparse_points for item in self.per_h],
            }
        )

    def to_dict(self) -> Dict:
        """Serializable representation."""
        return {
            "mode": self.mode.value,
            "variant": self.statistic_variant.value,
            "L_n": self.L_n,
            "per_h": self.to_frame().to_dict(orient="records"),
        }


def compute_statistics(
    path: ObservedPath,
    model: DiffusionModel,
    theta: ThetaLike,
    region: Region,
    bandwidths: Sequence[float],
    variant: Union[str, Variant] = Variant.LSEL,
    mode: Union[str, Mode] = Mode.GRID,
    grid: Tuple[int, int] = (40, 40),
    kernel: Kernel = BIWEIGHT,
    min_effective_pairs: float = MIN_EFFECTIVE_PAIRS,
) -> TestStatistics:
    """N(h) for every bandwidth of the set and L_n.

    The parametric transition matrix and the region grid are built once and shared by all bandwidths.
    """
    variant = Variant(variant)
    mode = Mode(mode)
    transition_matrix = parametric_transition_matrix(model, theta, path)
    grid_arrays = region.grid_over(*grid) if mode == Mode.GRID else grid
    per_h = [
        bandwidth_statistic(
            path, h, theta, model, region, variant, mode, grid_arrays, transition_matrix, kernel, min_effective_pairs
        )
        for h in bandwidths
    ]
    stats = TestStatistics(per_h=per_h, mode=mode, statistic_variant=variant)
    logger.debug(f"L_n={stats.L_n:.6g} over {len(per_h)} bandwidth(s)")
    return stats
