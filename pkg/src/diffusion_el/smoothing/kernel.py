"""Biweight kernel and its functionals."""

from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

# nodes exact for polynomials of degree <= 31, every integrand below is a piecewise polynomial of lower degree
_NODES, _WEIGHTS = leggauss(16)


class KernelConstant(str, Enum):
    """Kernel functionals available through `kernel_constant`."""

    R = "R"
    SIGMA2 = "sigma2"
    K2_OF = "K2_of"
    K4_ZERO = "K4_zero"
    MK2_OF = "MK2_of"
    NU_OF = "nu_of"


def _gauss_legendre(func, lo, hi):
    """Integrate func over [lo, hi] (broadcast over the shape of lo/hi); empty intervals give 0."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = np.maximum(hi - lo, 0.0) / 2.0
    mid = (hi + lo) / 2.0
    u = mid[..., None] + half[..., None] * _NODES
    return np.sum(func(u) * _WEIGHTS, axis=-1) * half


class Kernel:
    """Biweight kernel K(u) = 15/16 (1 - u^2)^2 on [-1, 1].

    Examples
    --------
    >>> kernel = Kernel()
    >>> float(kernel(0.0))
    0.9375
    >>> round(kernel.R, 10)
    0.7142857143
    >>> round(kernel.sigma2, 10)
    0.1428571429
    """

    name = "biweight"
    support = (-1.0, 1.0)

    def __call__(self, u):
        """Evaluate K(u)."""
        u = np.asarray(u, dtype=float)
        return np.where(np.abs(u) <= 1.0, 0.9375 * (1.0 - u**2) ** 2, 0.0)

    def __repr__(self) -> str:
        """String representation."""
        return f"Kernel(name={self.name})"

    def scaled(self, u, h: float):
        """K_h(u) = K(u / h) / h."""
        return self(np.asarray(u, dtype=float) / h) / h

    @cached_property
    def R(self) -> float:  # noqa: N802
        """R(K), the integral of K^2 (5/7 for the biweight)."""
        return float(_gauss_legendre(lambda u: self(u) ** 2, -1.0, 1.0))

    @cached_property
    def sigma2(self) -> float:
        """Second moment of K (1/7 for the biweight)."""
        return float(_gauss_legendre(lambda u: u**2 * self(u), -1.0, 1.0))

    def k2(self, z, c: float = 1.0):
        """Generalized convolution K^(2)(z, c), the integral of K(u) K(z + c u) du.

        The integrand is supported on the intersection of [-1, 1] and [(-1 - z)/c, (1 - z)/c].
        """
        if not c > 0:
            raise ValueError(f"c must be positive, given: {c}")
        z = np.asarray(z, dtype=float)
        lo = np.maximum(-1.0, (-1.0 - z) / c)
        hi = np.minimum(1.0, (1.0 - z) / c)
        zz = z[..., None]
        out = _gauss_legendre(lambda u: self(u) * self(zz + c * u), lo, hi)
        return float(out) if out.ndim == 0 else out

    def k2_square_integral(self, t: float) -> float:
        """Integral of {K^(2)(v, t)}^2 over v.

        K^(2)(., t) is a polynomial between the breakpoints +-(1 - t) and +-(1 + t), so Gauss-Legendre on
        each piece is exact.
        """
        if not t > 0:
            raise ValueError(f"t must be positive, given: {t}")
        breaks = np.unique(np.array([-1 - t, -abs(1 - t), abs(1 - t), 1 + t]))
        total = 0.0
        for lo, hi in zip(breaks[:-1], breaks[1:]):
            total += float(
                _gauss_legendre(lambda v: np.asarray(self.k2(v.ravel(), t)).reshape(v.shape) ** 2, lo, hi)
            )
        return total

    @cached_property
    def k4_zero(self) -> float:
        """K^(4)(0), the integral of {K^(2)(v, 1)}^2."""
        return self.k2_square_integral(1.0)

    def nu(self, t: float) -> float:
        """nu(t) = int {K^(2)(t u, t)}^2 du * int {K^(2)(v, t)}^2 dv = (int {K^(2)(v, t)}^2 dv)^2 / t."""
        return self.k2_square_integral(t) ** 2 / t

    def mk2(self, t):
        """MK^(2)(t), the integral of u K(u) K(t + u) du."""
        t = np.asarray(t, dtype=float)
        lo = np.maximum(-1.0, -1.0 - t)
        hi = np.minimum(1.0, 1.0 - t)
        tt = t[..., None]
        out = _gauss_legendre(lambda u: u * self(u) * self(tt + u), lo, hi)
        return float(out) if out.ndim == 0 else out


BIWEIGHT = Kernel()


def kernel_constant(
    which: str,
    z: Optional[float] = None,
    c: Optional[float] = None,
    t: Optional[float] = None,
    kernel: Kernel = BIWEIGHT,
) -> float:
    """Evaluate a kernel functional by name.

    Parameters
    ----------
    which: str
        One of "R", "sigma2", "K2_of" (needs z, c), "K4_zero", "MK2_of" (needs t), "nu_of" (needs t).
    z, c, t: float, optional
        Arguments of the functional.
    kernel: Kernel, optional
        Kernel, default is the biweight.

    Returns
    -------
    float

    Examples
    --------
    >>> kernel_constant("K2_of", z=2.5, c=1.0)
    0.0
    >>> abs(kernel_constant("MK2_of", t=0.0)) < 1e-15
    True
    """
    which = KernelConstant(which)
    if which == KernelConstant.R:
        return kernel.R
    if which == KernelConstant.SIGMA2:
        return kernel.sigma2
    if which == KernelConstant.K4_ZERO:
        return kernel.k4_zero
    if which == KernelConstant.K2_OF:
        if z is None or c is None:
            raise ValueError("K2_of needs z and c")
        return kernel.k2(z, c)
    if t is None:
        raise ValueError(f"{which.value} needs t")
    if which == KernelConstant.MK2_OF:
        return kernel.mk2(t)
    return kernel.nu(t)
