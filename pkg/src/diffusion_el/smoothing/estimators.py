"""Kernel estimators of the stationary and transitional densities.

The module houses the kernel transitional-density estimator, the local-linear weights and the double
smoothing of the parametric transition density. `GridSmoother` evaluates all of them on a set of points
for one bandwidth, which is what the test statistic needs.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import DiffusionModel, ThetaLike
from diffusion_el.smoothing.kernel import BIWEIGHT, Kernel
from diffusion_el.utils.errors import DegenerateWindowError

logger = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-12


def _check_bandwidth(h: float):
    if not h > 0:
        raise ValueError(f"The bandwidth must be positive, given: {h}")


def stationary_kde(path: ObservedPath, h: float, x, kernel: Kernel = BIWEIGHT):
    """Kernel estimate of the stationary density, the average of K_h(x - X_t) over all n+1 observations.

    Examples
    --------
    >>> path = ObservedPath([0.0, 0.0, 0.0], delta=1.0)
    >>> float(stationary_kde(path, 1.0, 0.0))
    0.9375
    """
    _check_bandwidth(h)
    x = np.asarray(x, dtype=float)
    out = kernel.scaled(x[..., None] - path.values, h).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def joint_kde(path: ObservedPath, h: float, x, y, kernel: Kernel = BIWEIGHT):
    """Kernel estimate of the joint density of (X_t, X_{t+1}) from the n pairs."""
    _check_bandwidth(h)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    kx = kernel.scaled(x[..., None] - path.x, h)
    ky = kernel.scaled(y[..., None] - path.y, h)
    out = (kx * ky).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def transition_kde(path: ObservedPath, h: float, x, y, kernel: Kernel = BIWEIGHT):
    """Kernel estimate of the transitional density p(y | x).

    p_hat(y|x) = n^{-1} sum_t K_h(x - X_t) K_h(y - X_{t+1}) / pi_hat(x), one bandwidth for both
    coordinates.

    Raises
    ------
    DegenerateWindowError
        If pi_hat(x) = 0 (no observation within h of x).
    """
    pi_hat = np.asarray(stationary_kde(path, h, x, kernel))
    if np.any(pi_hat <= 0):
        raise DegenerateWindowError(f"No observation within h={h} of the conditioning state")
    out = np.asarray(joint_kde(path, h, x, y, kernel)) / pi_hat
    return float(out) if out.ndim == 0 else out


def _local_linear_rows(
    values: np.ndarray, h: float, y: np.ndarray, kernel: Kernel, fallback: bool
) -> Tuple[np.ndarray, np.ndarray]:
    """Local-linear weights for every y (rows) over `values` (columns) and the per-row degeneracy flag."""
    diff = y[:, None] - values[None, :]
    k = kernel.scaled(diff, h)
    s0 = k.sum(axis=1)
    s1 = (k * diff).sum(axis=1)
    s2 = (k * diff**2).sum(axis=1)
    den = s2 * s0 - s1**2
    degenerate = ~(den > DEGENERACY_TOL * s2 * s0) | (s0 <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        weights = k * (s2[:, None] - s1[:, None] * diff) / den[:, None]
    if np.any(degenerate):
        if not fallback:
            raise DegenerateWindowError(
                f"Local-linear window is degenerate at {int(degenerate.sum())} point(s) for h={h}"
            )
        with np.errstate(divide="ignore", invalid="ignore"):
            nadaraya_watson = np.where(s0[:, None] > 0, k / s0[:, None], 0.0)
        weights[degenerate] = nadaraya_watson[degenerate]
    return weights, degenerate


def local_linear_weights(
    path: ObservedPath, h: float, y: float, kernel: Kernel = BIWEIGHT, fallback: bool = False
) -> np.ndarray:
    """Local-linear weights w_s(y) over all n+1 observations.

    w_s(y) = K_h(y - X_s) [s_2 - s_1 (y - X_s)] / [s_2 s_0 - s_1^2] with s_r = sum_s K_h(y - X_s)(y - X_s)^r.

    Parameters
    ----------
    path: ObservedPath
        Observations.
    h: float
        Bandwidth.
    y: float
        Evaluation point.
    kernel: Kernel, optional
        Smoothing kernel.
    fallback: bool, optional, default is False
        True to return Nadaraya-Watson weights instead of raising on a degenerate window.

    Returns
    -------
    numpy.ndarray
        Weights of length n+1; they sum to one and reproduce linear functions.

    Raises
    ------
    DegenerateWindowError
        If s_2 s_0 - s_1^2 is not larger than 1e-12 s_2 s_0 and `fallback` is False.
    """
    _check_bandwidth(h)
    weights, _ = _local_linear_rows(path.values, h, np.atleast_1d(np.asarray(y, dtype=float)), kernel, fallback)
    return weights[0]


def parametric_transition_matrix(model: DiffusionModel, theta: ThetaLike, path: ObservedPath) -> np.ndarray:
    """Matrix P[s, t] = p_theta(X_s | X_t) over all n+1 observations.

    It does not depend on the bandwidth, so one matrix serves every h of the bandwidth set.
    """
    values = path.values
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        matrix = model.transition_density(values[:, None], values[None, :], path.delta, theta)
    return np.nan_to_num(np.asarray(matrix, dtype=float), nan=0.0, posinf=0.0)


def smoothed_param_density(
    path: ObservedPath,
    h: float,
    theta: ThetaLike,
    model: DiffusionModel,
    x: float,
    y: float,
    kernel: Kernel = BIWEIGHT,
    transition_matrix: Optional[np.ndarray] = None,
) -> float:
    """Double-smoothed parametric transition density.

    p_tilde(y|x) = sum_t K_h(x - X_t) sum_s w_s(y) p_theta(X_s | X_t) / sum_t K_h(x - X_t), sums over all
    n+1 observations.

    Raises
    ------
    DegenerateWindowError
        If no observation lies within h of x or the local-linear window at y is degenerate.
    """
    _check_bandwidth(h)
    if transition_matrix is None:
        transition_matrix = parametric_transition_matrix(model, theta, path)
    kx = kernel.scaled(x - path.values, h)
    if not kx.sum() > 0:
        raise DegenerateWindowError(f"No observation within h={h} of x={x}")
    w = local_linear_weights(path, h, y, kernel)
    inner = w @ transition_matrix
    return float(kx @ inner / kx.sum())


@dataclass
class SmoothedDensities:
    """Kernel and smoothed parametric densities on a set of points for one bandwidth.

    `p_hat` and `p_tilde_theta` are conditional densities (0 where pi_hat is 0); the joint versions
    multiply them by `pi_hat`.
    """

    grid: np.ndarray
    p_hat: np.ndarray
    p_tilde_theta: np.ndarray
    pi_hat: np.ndarray
    h: float
    degenerate_windows: int = 0

    @property
    def p_hat_joint(self) -> np.ndarray:
        """p_hat(x, y) = p_hat(y|x) pi_hat(x)."""
        return self.p_hat * self.pi_hat

    @property
    def p_tilde_joint(self) -> np.ndarray:
        """p_tilde(x, y) = p_tilde(y|x) pi_hat(x)."""
        return self.p_tilde_theta * self.pi_hat

    def to_frame(self) -> pd.DataFrame:
        """Densities as a plotting-ready DataFrame."""
        return pd.DataFrame(
            {
                "h": self.h,
                "x": self.grid[:, 0],
                "y": self.grid[:, 1],
                "pi_hat": self.pi_hat,
                "p_hat": self.p_hat,
                "p_tilde": self.p_tilde_theta,
            }
        )


class GridSmoother:
    """Kernel quantities of one path and one bandwidth at a fixed set of (x, y) points.

    The kernel rows K_h(x - X_t) and K_h(y - X_t) are built once; the local constraint vectors of the
    empirical likelihood and the double-smoothed target reuse them.

    Parameters
    ----------
    path: ObservedPath
        Observations.
    h: float
        Bandwidth.
    points: numpy.ndarray
        (G, 2) array of (x, y) evaluation points.
    kernel: Kernel, optional
        Smoothing kernel.
    """

    def __init__(self, path: ObservedPath, h: float, points: np.ndarray, kernel: Kernel = BIWEIGHT):
        """Initialize the smoother."""
        _check_bandwidth(h)
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        self.path = path
        self.h = float(h)
        self.points = points
        self.kernel = kernel
        values = path.values
        self._kx = kernel.scaled(points[:, [0]] - values[None, :], h)
        self._ky = kernel.scaled(points[:, [1]] - values[None, :], h)
        self._weights: Optional[np.ndarray] = None
        self.degenerate_windows = 0

    def __repr__(self) -> str:
        """String representation."""
        return f"GridSmoother(h={self.h}, points={len(self.points)}, n={self.path.n})"

    @property
    def pi_hat(self) -> np.ndarray:
        """Stationary KDE at the x coordinates."""
        return self._kx.mean(axis=1)

    @property
    def pair_products(self) -> np.ndarray:
        """(G, n) matrix of K_h(x - X_t) K_h(y - X_{t+1}), t = 1..n."""
        return self._kx[:, :-1] * self._ky[:, 1:]

    @property
    def joint_kde(self) -> np.ndarray:
        """Kernel estimate of the joint density p_hat(x, y)."""
        return self.pair_products.mean(axis=1)

    @property
    def effective_pairs(self) -> np.ndarray:
        """Effective number of pairs in the window of every point, (sum A_t)^2 / sum A_t^2 (0 if empty)."""
        products = self.pair_products
        total = products.sum(axis=1)
        square = (products**2).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(square > 0, total**2 / square, 0.0)

    @property
    def local_linear(self) -> np.ndarray:
        """(G, n+1) local-linear weights at the y coordinates, Nadaraya-Watson where degenerate."""
        if self._weights is None:
            self._weights, degenerate = _local_linear_rows(
                self.path.values, self.h, self.points[:, 1], self.kernel, fallback=True
            )
            self.degenerate_windows = int(degenerate.sum())
            if self.degenerate_windows:
                logger.warning(
                    f"{self.degenerate_windows} degenerate local-linear window(s) at h={self.h:.6g}, "
                    "Nadaraya-Watson weights used"
                )
        return self._weights

    def target_joint(self, transition_matrix: np.ndarray) -> np.ndarray:
        """Double-smoothed parametric joint density p_tilde(y|x) pi_hat(x) at every point.

        Points with no observation within h of x or y get 0. Negative values from local-linear
        extrapolation are clipped at 0.
        """
        inner = self.local_linear @ transition_matrix
        target = np.einsum("gt,gt->g", self._kx, inner) / self._kx.shape[1]
        supported = (self._kx.sum(axis=1) > 0) & (self._ky.sum(axis=1) > 0)
        return np.where(supported, np.maximum(target, 0.0), 0.0)

    def densities(self, transition_matrix: np.ndarray) -> SmoothedDensities:
        """Conditional kernel and smoothed parametric densities at every point."""
        pi_hat = self.pi_hat
        positive = pi_hat > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            p_hat = np.where(positive, self.joint_kde / pi_hat, 0.0)
            p_tilde = np.where(positive, self.target_joint(transition_matrix) / pi_hat, 0.0)
        return SmoothedDensities(
            grid=self.points,
            p_hat=p_hat,
            p_tilde_theta=p_tilde,
            pi_hat=pi_hat,
            h=self.h,
            degenerate_windows=self.degenerate_windows,
        )
