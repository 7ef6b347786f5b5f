"""Asymptotic reference distribution of the standardized statistics.

Under the null the vector ((N(h_k) - 1) / (sqrt(2) h_k))_k is asymptotically N(beta 1_J, Sigma_J) with
Sigma_J = (2 / R(K)^4) int omega^2 (nu(a^{|i-j|}))_{ij}; L_n converges to the maximum of that vector.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import stats

from diffusion_el.models.path import ObservedPath
from diffusion_el.smoothing.estimators import GridSmoother, stationary_kde
from diffusion_el.smoothing.kernel import BIWEIGHT, Kernel
from diffusion_el.statistic.bandwidth import BandwidthSet
from diffusion_el.statistic.region import Region

logger = logging.getLogger(__name__)

EIGEN_FLOOR = 1e-12


def sigma_matrix(bandwidths: Sequence[float], region: Region, kernel: Kernel = BIWEIGHT) -> np.ndarray:
    """Sigma_J from the ratios h_i / h_j of the set.

    For a geometric set h_i / h_j = a^{i-j}; the entry uses the ratio of the smaller to the larger
    bandwidth so the matrix is symmetric. Eigenvalues are floored at 1e-12.
    """
    h = np.sort(np.asarray(bandwidths, dtype=float))
    factor = 2.0 / kernel.R**4 * region.weight_square_integral
    size = h.size
    sigma = np.empty((size, size))
    cache = {}
    for i in range(size):
        for j in range(i, size):
            ratio = round(h[i] / h[j], 12)
            if ratio not in cache:
                cache[ratio] = kernel.nu(ratio)
            sigma[i, j] = sigma[j, i] = factor * cache[ratio]
    values, vectors = np.linalg.eigh(sigma)
    if values.min() < EIGEN_FLOOR:
        values = np.maximum(values, EIGEN_FLOOR)
        sigma = (vectors * values) @ vectors.T
        sigma = 0.5 * (sigma + sigma.T)
    return sigma


def beta_plugin(
    path: ObservedPath,
    h: float,
    region: Region,
    grid: Tuple[int, int] = (40, 40),
    kernel: Kernel = BIWEIGHT,
) -> Tuple[float, float]:
    """Plug-in estimate of int p(x, y) / pi(y) omega(x, y) dx dy scaled by the kernel.

    Returns
    -------
    tuple
        (beta with 1/(sqrt(2) R(K)), beta with 1/R(K)).
    """
    points, cell_area = region.grid_over(*grid)
    smoother = GridSmoother(path, h, points, kernel)
    joint = smoother.joint_kde
    pi_y = stationary_kde(path, h, points[:, 1], kernel)
    weight = np.asarray(region.uniform_weight(points[:, 0], points[:, 1])) * cell_area
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(pi_y > 0, joint / pi_y, 0.0)
    integral = float(np.sum(integrand * weight))
    return integral / (np.sqrt(2.0) * kernel.R), integral / kernel.R


@dataclass
class AsymptoticRef:
    """Asymptotic reference: mean beta, covariance Sigma_J and Monte Carlo draws of max_k Z_k.

    Attributes
    ----------
    beta: float
        Mean used for the reference (the 1/(sqrt(2) R(K)) normalization).
    beta_alternative: float
        The same integral with the 1/R(K) normalization.
    sigma_J: numpy.ndarray
        J x J covariance.
    bandwidths: numpy.ndarray
        Increasing bandwidths h_1..h_J.
    max_draws: numpy.ndarray
        Sorted draws of max_k Z_k.
    """

    beta: float
    beta_alternative: float
    sigma_J: np.ndarray  # noqa: N815
    bandwidths: np.ndarray
    max_draws: np.ndarray

    def z_draws_quantile_fn(self, q: Union[float, np.ndarray]):
        """Quantile function of max_k Z_k from the Monte Carlo draws."""
        return np.quantile(self.max_draws, q)

    def max_critical_value(self, alpha: float) -> float:
        """Upper-alpha quantile of max_k Z_k."""
        return float(self.z_draws_quantile_fn(1.0 - alpha))

    def single_critical_value(self, k: int, alpha: float) -> float:
        """Upper-alpha quantile of Z_k = N(beta, Sigma_kk)."""
        return float(self.beta + stats.norm.ppf(1.0 - alpha) * np.sqrt(self.sigma_J[k, k]))

    def reject_max(self, l_n: float, alpha: float) -> bool:
        """Asymptotic test based on L_n."""
        return bool(l_n >= self.max_critical_value(alpha))

    def reject_single(self, standardized: float, k: int, alpha: float) -> bool:
        """Asymptotic test based on the single bandwidth h_k."""
        return bool(standardized >= self.single_critical_value(k, alpha))

    def to_dict(self) -> dict:
        """Serializable representation (without the draws)."""
        return {
            "beta": self.beta,
            "beta_alternative": self.beta_alternative,
            "sigma_J": self.sigma_J.tolist(),
            "bandwidths": self.bandwidths.tolist(),
        }


def asymptotic_ref(
    path: ObservedPath,
    h_set: Union[BandwidthSet, Sequence[float]],
    region: Region,
    grid: Tuple[int, int] = (40, 40),
    rng: np.random.Generator = None,
    n_draws: int = 100_000,
    kernel: Kernel = BIWEIGHT,
) -> AsymptoticRef:
    """Build the asymptotic reference for a path and a bandwidth set.

    beta is estimated at every bandwidth of the set and averaged, since its limit does not depend on h.

    Parameters
    ----------
    path: ObservedPath
        Observed path.
    h_set: BandwidthSet or sequence of float
        Bandwidths.
    region: Region
        Integration region.
    grid: tuple, optional, default is (40, 40)
        Region grid for the beta integral.
    rng: numpy.random.Generator, optional
        Stream for the Gaussian draws; a fixed default stream is used when omitted.
    n_draws: int, optional, default is 100000
        Number of draws of Z.
    kernel: Kernel, optional
        Smoothing kernel.

    Returns
    -------
    AsymptoticRef
    """
    bandwidths = np.sort(np.asarray(getattr(h_set, "values", h_set), dtype=float))
    estimates = np.array([beta_plugin(path, h, region, grid, kernel) for h in bandwidths])
    beta, beta_alternative = estimates.mean(axis=0)
    sigma = sigma_matrix(bandwidths, region, kernel)
    rng = np.random.default_rng(0) if rng is None else rng
    draws = rng.multivariate_normal(np.full(bandwidths.size, beta), sigma, size=n_draws, method="eigh")
    max_draws = np.sort(draws.max(axis=1))
    logger.debug(f"Asymptotic reference: beta={beta:.6g}, Sigma_11={sigma[0, 0]:.6g}")
    return AsymptoticRef(
        beta=float(beta),
        beta_alternative=float(beta_alternative),
        sigma_J=sigma,
        bandwidths=bandwidths,
        max_draws=max_draws,
    )
