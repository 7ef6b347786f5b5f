"""Parametric short-rate diffusion models.

Every model is a one-factor diffusion dX_t = mu(X_t; theta) dt + sigma(X_t; theta) dB_t. The Vasicek and
CIR families carry their exact Gaussian and noncentral chi-square transition laws, the other families
(ICIR, CEV, NLDrift) use the Euler pseudo-density.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate, special, stats

from diffusion_el.models.path import ObservedPath
from diffusion_el.utils.errors import ModelNotStationaryError, ParameterDomainError

logger = logging.getLogger(__name__)

STATE_FLOOR = 1e-7
TAIL_LOG_DROP = 40.0
TABLE_SIZE = 8001


class Family(str, Enum):
    """Supported model families."""

    VASICEK = "vasicek"
    CIR = "cir"
    ICIR = "icir"
    CEV = "cev"
    NLDRIFT = "nldrift"


class DensityKind(str, Enum):
    """How the transition density of a family is evaluated."""

    EXACT = "exact"
    EULER = "euler"


@dataclass(frozen=True, eq=False)
class ParamVector:
    """A parameter vector with named entries.

    Examples
    --------
    >>> theta = ParamVector(("kappa", "alpha", "sigma2"), np.array([0.85837, 0.089102, 0.0021854]))
    >>> theta["alpha"]
    0.089102
    >>> theta.as_dict()["kappa"]
    0.85837
    """

    names: Tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        """Freeze the values."""
        values = np.array(self.values, dtype=float).ravel()
        if values.size != len(self.names):
            raise ValueError(f"Expected {len(self.names)} values for {self.names}, given: {values.size}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))

    def __getitem__(self, key: Union[str, int]) -> float:
        """Get a parameter by name or position."""
        if isinstance(key, str):
            if key not in self.names:
                raise KeyError(f"Unknown parameter {key}, available: {self.names}")
            key = self.names.index(key)
        return float(self.values[key])

    def __len__(self) -> int:
        """Number of parameters."""
        return self.values.size

    def __iter__(self):
        """Iterate over the values."""
        return iter(self.values.tolist())

    def __repr__(self) -> str:
        """String representation."""
        inner = ", ".join(f"{k}={v:.6g}" for k, v in zip(self.names, self.values))
        return f"ParamVector({inner})"

    def as_dict(self) -> Dict[str, float]:
        """Parameters as a name-to-value mapping."""
        return {k: float(v) for k, v in zip(self.names, self.values)}


ThetaLike = Union[ParamVector, Sequence[float], np.ndarray, Mapping[str, float]]


@dataclass(frozen=True)
class StationaryTable:
    """Tabulated stationary density on a grid (used for inverse-CDF sampling)."""

    grid: np.ndarray
    pdf: np.ndarray
    cdf: np.ndarray
    anchor: float
    log_normalizer: float


class DiffusionModel(ABC):
    """Base class of the parametric diffusion families.

    Parameters
    ----------
    euler_substeps: int, optional, default is 20
        Euler-Maruyama sub-steps per sampling interval used when simulating families without an exact
        sampler.
    density_substeps: int, optional, default is 1
        Sub-steps of the Euler pseudo-density (1 gives the plain Gaussian Euler density, more sub-steps
        refine it by Chapman-Kolmogorov convolution on a grid).
    state_floor: float, optional, default is 1e-7
        Positivity floor used by the Euler simulator of positive-state families.
    """

    family: Family
    param_names: Tuple[str, ...]
    param_domain: Tuple[Tuple[float, float], ...]
    density_kind: DensityKind = DensityKind.EULER
    positive_state: bool = True
    diffusion_power: float = 0.0

    def __init__(self, euler_substeps: int = 20, density_substeps: int = 1, state_floor: float = STATE_FLOOR):
        """Initialize the model."""
        if euler_substeps < 1 or density_substeps < 1:
            raise ValueError("The number of Euler sub-steps must be a positive integer")
        self.euler_substeps = int(euler_substeps)
        self.density_substeps = int(density_substeps)
        self.state_floor = float(state_floor)

    def __repr__(self) -> str:
        """String representation."""
        return f"{type(self).__name__}(params={self.param_names}, density={self.density_kind.value})"

    @property
    def param_dim(self) -> int:
        """Number of parameters d."""
        return len(self.param_names)

    # ------------------------------------------------------------------ parameters
    def params(self, theta: ThetaLike, allow_degenerate: bool = False) -> ParamVector:
        """Validate a parameter vector.

        Parameters
        ----------
        theta: ParamVector, sequence or mapping
            Parameter values, in the order of `param_names` or keyed by name.
        allow_degenerate: bool, optional, default is False
            True to accept a zero diffusion scale (deterministic paths).

        Returns
        -------
        ParamVector

        Raises
        ------
        ParameterDomainError
            If a value lies outside the open parameter domain.
        """
        if isinstance(theta, ParamVector):
            if theta.names != self.param_names:
                raise ParameterDomainError(f"Parameters {theta.names} do not match {self.param_names}")
            values = theta.values
        elif isinstance(theta, Mapping):
            missing = set(self.param_names) - set(theta)
            extra = set(theta) - set(self.param_names)
            if missing or extra:
                raise ParameterDomainError(
                    f"{self.family.value} expects parameters {self.param_names}, given: {sorted(theta)}"
                )
            values = [theta[name] for name in self.param_names]
        else:
            values = theta
        values = np.asarray(values, dtype=float).ravel()
        if values.size != self.param_dim:
            raise ParameterDomainError(
                f"{self.family.value} expects {self.param_dim} parameters, given: {values.size}"
            )
        for name, value, (low, high) in zip(self.param_names, values, self.param_domain):
            if allow_degenerate and name in ("sigma", "sigma2") and value == 0:
                continue
            if not (np.isfinite(value) and low < value < high):
                raise ParameterDomainError(f"{name}={value} is outside the domain ({low}, {high})")
        return ParamVector(self.param_names, values)

    def to_unconstrained(self, theta: ThetaLike) -> np.ndarray:
        """Map a parameter vector to an unconstrained vector (log for positive, logit for bounded)."""
        values = self.params(theta).values
        out = np.empty_like(values)
        for i, (v, (low, high)) in enumerate(zip(values, self.param_domain)):
            if np.isinf(low) and np.isinf(high):
                out[i] = v
            elif np.isinf(high):
                out[i] = np.log(v - low)
            else:
                out[i] = special.logit((v - low) / (high - low))
        return out

    def from_unconstrained(self, z: np.ndarray) -> ParamVector:
        """Inverse of `to_unconstrained`."""
        z = np.asarray(z, dtype=float)
        values = np.empty_like(z)
        for i, (v, (low, high)) in enumerate(zip(z, self.param_domain)):
            if np.isinf(low) and np.isinf(high):
                values[i] = v
            elif np.isinf(high):
                values[i] = low + np.exp(v)
            else:
                values[i] = low + (high - low) * special.expit(v)
        return self.params(values)

    # ------------------------------------------------------------------ coefficients
    def check_state(self, x) -> np.ndarray:
        """Validate states against the state space."""
        x = np.asarray(x, dtype=float)
        if self.positive_state and np.any(x <= 0):
            raise ParameterDomainError(f"{self.family.value} is defined on positive states only")
        return x

    @abstractmethod
    def _drift(self, x: np.ndarray, theta: ParamVector) -> np.ndarray:
        """Drift without validation."""

    @abstractmethod
    def _sigma(self, x: np.ndarray, theta: ParamVector) -> np.ndarray:
        """Diffusion coefficient without validation."""

    def drift(self, x, theta: ThetaLike):
        """Drift mu(x; theta).

        Parameters
        ----------
        x: float or array
            State(s).
        theta: ParamVector, sequence or mapping
            Parameters.

        Returns
        -------
        float or array

        Raises
        ------
        ParameterDomainError
            If theta or x is outside the domain.
        """
        theta = self.params(theta)
        x = self.check_state(x)
        return self._drift(x, theta)

    def diffusion(self, x, theta: ThetaLike):
        """Diffusion coefficient sigma(x; theta) > 0.

        Raises
        ------
        ParameterDomainError
            If theta or x is outside the domain or the coefficient is not positive.
        """
        theta = self.params(theta)
        x = self.check_state(x)
        value = self._sigma(x, theta)
        if np.any(~(value > 0)):
            raise ParameterDomainError(f"Non-positive diffusion coefficient for {self.family.value} at x={x}")
        return value

    # ------------------------------------------------------------------ transition density
    def transition_density(self, y, x, delta: float, theta: ThetaLike):
        """Transition density p_theta(y | x, delta).

        Broadcasts over `y` and `x`.
        """
        return np.exp(self.log_transition_density(y, x, delta, theta))

    def log_transition_density(self, y, x, delta: float, theta: ThetaLike):
        """Log transition density; the default is the Euler pseudo-density."""
        theta = self.params(theta)
        return np.log(euler_transition_density(self, y, x, delta, theta, substeps=self.density_substeps))

    def loglik(self, theta: ThetaLike, path: ObservedPath) -> float:
        """Log-likelihood of the transitions of a path (conditional on the first observation)."""
        theta = self.params(theta)
        self.check_path(path)
        return float(np.sum(self.log_transition_density(path.y, path.x, path.delta, theta)))

    def check_path(self, path: ObservedPath):
        """Validate a path against the state space."""
        if self.positive_state and np.any(path.values <= 0):
            raise ParameterDomainError(f"{self.family.value} requires a strictly positive path")

    # ------------------------------------------------------------------ stationary law
    def anchor(self, theta: ParamVector) -> float:
        """Interior state used as the lower limit x_0 of the stationary-density exponent."""
        return theta["alpha"]

    def _log_speed(self, x: np.ndarray, theta: ParamVector) -> np.ndarray:
        """-2 log sigma(x)."""
        return -2.0 * np.log(self._sigma(x, theta))

    def _scale_integrand(self, x: np.ndarray, theta: ParamVector) -> np.ndarray:
        """2 mu(x) / sigma^2(x)."""
        return 2.0 * self._drift(x, theta) / self._sigma(x, theta) ** 2

    def _local_scale(self, x0: float, theta: ParamVector) -> float:
        """Width of the stationary law around the anchor from a local Ornstein-Uhlenbeck approximation."""
        step = 1e-6 * max(abs(x0), 1e-3)
        slope = (self._drift(np.array(x0 + step), theta) - self._drift(np.array(x0 - step), theta)) / (2 * step)
        sigma = float(self._sigma(np.array(x0), theta))
        if slope < 0 and np.isfinite(slope) and sigma > 0:
            return sigma / np.sqrt(-2.0 * float(slope))
        return 0.1 * max(abs(x0), 1e-2)

    def _exponent(self, x: np.ndarray, theta: ParamVector, x0: float) -> np.ndarray:
        """Integral of 2 mu / sigma^2 from x0 to x by adaptive quadrature."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            out[i] = integrate.quad(
                lambda t: float(self._scale_integrand(np.array(t), theta)), x0, xi, epsabs=1e-13, epsrel=1e-12,
                limit=200,
            )[0]
        return out

    def stationary_table(self, theta: ThetaLike, size: int = TABLE_SIZE) -> StationaryTable:
        """Tabulate the stationary density from the Kolmogorov forward formula.

        The support is expanded from the anchor until the log-density has dropped by 40 on both sides
        (or the lower end hits the positivity floor) and the density is normalized numerically.

        Raises
        ------
        ModelNotStationaryError
            If the density does not decay (the normalizer diverges).
        """
        theta = self.params(theta)
        x0 = self.anchor(theta)
        if self.positive_state and x0 <= self.state_floor:
            raise ModelNotStationaryError(f"No interior anchor for {self.family.value} at {theta}")
        scale = self._local_scale(x0, theta)
        floor = self.state_floor if self.positive_state else -np.inf
        lo_width, hi_width = 12.0 * scale, 12.0 * scale
        for _ in range(60):
            lo = max(x0 - lo_width, floor)
            hi = x0 + hi_width
            half = size // 2 + 1
            left = np.linspace(x0, lo, half)
            right = np.linspace(x0, hi, half)
            with np.errstate(all="ignore"):
                log_left = self._log_speed(left, theta) + _cumulative_simpson(
                    self._scale_integrand(left, theta), left
                )
                log_right = self._log_speed(right, theta) + _cumulative_simpson(
                    self._scale_integrand(right, theta), right
                )
            if not (np.all(np.isfinite(log_right)) and np.all(np.isfinite(log_left[:-1]))):
                raise ModelNotStationaryError(f"Stationary density of {self.family.value} is not finite at {theta}")
            top = max(np.max(log_left[np.isfinite(log_left)]), np.max(log_right))
            grow = False
            if log_right[-1] > top - TAIL_LOG_DROP:
                hi_width *= 2.0
                grow = True
            at_floor = lo <= floor
            if not at_floor and log_left[-1] > top - TAIL_LOG_DROP:
                lo_width *= 2.0
                grow = True
            if at_floor and np.isfinite(log_left[-1]) and log_left[-1] > top - TAIL_LOG_DROP:
                if log_left[-1] >= log_left[-2]:
                    raise ModelNotStationaryError(
                        f"Stationary density of {self.family.value} accumulates at the boundary for {theta}"
                    )
            if not grow:
                break
        else:
            raise ModelNotStationaryError(f"Stationary density of {self.family.value} is not integrable at {theta}")

        grid = np.concatenate([left[::-1], right[1:]])
        log_density = np.concatenate([log_left[::-1], log_right[1:]])
        log_density = np.where(np.isfinite(log_density), log_density, -np.inf)
        density = np.exp(log_density - top)
        mass = integrate.simpson(density, x=grid)
        if not (np.isfinite(mass) and mass > 0):
            raise ModelNotStationaryError(f"Stationary normalizer of {self.family.value} diverges at {theta}")
        pdf = density / mass
        cdf = integrate.cumulative_trapezoid(pdf, grid, initial=0.0)
        cdf /= cdf[-1]
        return StationaryTable(grid=grid, pdf=pdf, cdf=cdf, anchor=x0, log_normalizer=-(top + np.log(mass)))

    def generic_stationary_density(self, x, theta: ThetaLike, table: Optional[StationaryTable] = None):
        """Stationary density from the Kolmogorov forward formula.

        pi(x) = xi(theta) / sigma^2(x) * exp(int_{x0}^{x} 2 mu(t) / sigma^2(t) dt), the exponent by adaptive
        quadrature and the normalizing constant xi(theta) from the tabulated density.
        """
        theta = self.params(theta)
        table = self.stationary_table(theta) if table is None else table
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.zeros_like(flat)
        inside = (flat > self.state_floor) if self.positive_state else np.ones(flat.shape, dtype=bool)
        if np.any(inside):
            xs = flat[inside]
            out[inside] = np.exp(
                table.log_normalizer + self._log_speed(xs, theta) + self._exponent(xs, theta, table.anchor)
            )
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def stationary_density(self, x, theta: ThetaLike):
        """Stationary density pi_theta(x)."""
        return self.generic_stationary_density(x, theta)

    def sample_stationary(self, theta: ThetaLike, rng: np.random.Generator, size: Optional[int] = None):
        """Draw from the stationary law by inverse-CDF sampling of the tabulated density."""
        return self.sample_stationary_tabulated(theta, rng, size)

    def sample_stationary_tabulated(self, theta: ThetaLike, rng: np.random.Generator, size: Optional[int] = None):
        """Inverse-CDF sampling from the numerically normalized stationary density."""
        table = self.stationary_table(theta)
        u = rng.uniform(size=size)
        draws = np.interp(u, table.cdf, table.grid)
        return float(draws) if size is None else draws

    # ------------------------------------------------------------------ simulation
    def exact_step(self, x, delta: float, theta: ParamVector, rng: np.random.Generator):
        """One exact transition from every state in `x` (a float for a scalar state).

        Families without an exact sampler raise NotImplementedError.
        """
        raise NotImplementedError(f"{self.family.value} has no exact sampler")

    @property
    def has_exact_sampler(self) -> bool:
        """True if the family has an exact one-step sampler."""
        return type(self).exact_step is not DiffusionModel.exact_step

    def simulate_path(
        self,
        theta: ThetaLike,
        n: int,
        delta: float,
        x0: float,
        rng: np.random.Generator,
        scheme: str = "auto",
    ) -> ObservedPath:
        """Simulate n transitions at the sampling interval delta.

        Parameters
        ----------
        theta: ParamVector, sequence or mapping
            Parameters; a zero diffusion scale is accepted and gives a deterministic path.
        n: int
            Number of transitions (the path has n+1 values).
        delta: float
            Sampling interval.
        x0: float
            Initial state X_1.
        rng: numpy.random.Generator
            Random stream.
        scheme: str, optional, default is "auto"
            "exact", "euler" or "auto" (exact when the family has an exact sampler).

        Returns
        -------
        ObservedPath
            The path; `metadata["clamps"]` counts Euler excursions below the positivity floor.
        """
        if n < 2:
            raise ValueError(f"n must be at least 2, given: {n}")
        if not delta > 0:
            raise ValueError(f"delta must be positive, given: {delta}")
        theta = self.params(theta, allow_degenerate=True)
        self.check_state(x0)
        if scheme == "auto":
            scheme = "exact" if self.has_exact_sampler else "euler"
        values = np.empty(n + 1)
        values[0] = x0
        clamps = 0
        if scheme == "exact":
            for t in range(n):
                values[t + 1] = self.exact_step(values[t], delta, theta, rng)
        elif scheme == "euler":
            m = self.euler_substeps
            dt = delta / m
            noise = rng.standard_normal((n, m)) * np.sqrt(dt)
            x = float(x0)
            for t in range(n):
                for k in range(m):
                    xa = np.array(x)
                    x = x + float(self._drift(xa, theta)) * dt + float(self._sigma(xa, theta)) * noise[t, k]
                    if self.positive_state and x < self.state_floor:
                        x = self.state_floor
                        clamps += 1
                values[t + 1] = x
        else:
            raise ValueError(f"Unknown simulation scheme: {scheme}")
        if clamps:
            logger.warning(f"Euler path of {self.family.value} clamped {clamps} times at {self.state_floor}")
        return ObservedPath(values, delta, metadata={"scheme": scheme, "clamps": clamps})

    # ------------------------------------------------------------------ estimation support
    def initial_guess(self, path: ObservedPath) -> np.ndarray:
        """Moment-based starting values from the AR(1) regression of X_{t+1} on X_t."""
        kappa, alpha, resid = _ar1_start(path)
        x = path.x
        sigma2 = float(np.mean(resid**2 / np.abs(x) ** (2 * self.diffusion_power)) / path.delta)
        return np.array([kappa, alpha, np.sqrt(sigma2)])

    def closed_form_fit(self, path: ObservedPath):
        """Closed-form maximum likelihood fit, None for families fitted numerically."""
        return None


def _ar1_start(path: ObservedPath) -> Tuple[float, float, np.ndarray]:
    """Mean-reversion speed, long-run mean and residuals of the AR(1) regression."""
    x, y = path.x, path.y
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - intercept - slope * x
    if 0 < slope < 1:
        kappa = -np.log(slope) / path.delta
        alpha = intercept / (1 - slope)
    else:
        kappa, alpha = 1.0, float(np.mean(path.values))
    if not alpha > 0:
        alpha = float(np.mean(np.abs(path.values)))
    return float(kappa), float(alpha), resid


def _cumulative_simpson(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative integral of f over x starting at x[0] (0 at the first node)."""
    return integrate.cumulative_simpson(f, x=x, initial=0.0)


def euler_transition_density(
    model: DiffusionModel,
    y,
    x,
    delta: float,
    theta: ThetaLike,
    substeps: int = 1,
    grid_size: int = 1601,
):
    """Euler pseudo-density of a transition.

    With one sub-step this is the Gaussian N(x + mu(x) delta, sigma^2(x) delta). With m sub-steps the
    one-sub-step kernel is convolved m-1 times on a grid (Chapman-Kolmogorov), which converges to the true
    transition density as m grows.

    Parameters
    ----------
    model: DiffusionModel
        The diffusion.
    y, x: float or array
        Next and current states (broadcast against each other).
    delta: float
        Sampling interval.
    theta: ParamVector, sequence or mapping
        Parameters.
    substeps: int, optional, default is 1
        Number of sub-steps m.
    grid_size: int, optional, default is 1601
        Number of grid nodes of the convolution.

    Returns
    -------
    float or array

    Examples
    --------
    >>> model = Vasicek()
    >>> theta = (0.85837, 0.089102, 0.0021854)
    >>> p = euler_transition_density(model, 0.089102, 0.089102, 1 / 12, theta)
    >>> bool(abs(p - 1 / np.sqrt(2 * np.pi * 0.0021854 / 12)) < 1e-9)
    True
    """
    theta = model.params(theta)
    if not delta > 0:
        raise ValueError(f"delta must be positive, given: {delta}")
    y, x = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(x, dtype=float))
    model.check_state(x)
    scalar = y.ndim == 0
    if substeps == 1:
        mean = x + model._drift(x, theta) * delta
        sd = model._sigma(x, theta) * np.sqrt(delta)
        out = stats.norm.pdf(y, loc=mean, scale=sd)
        if model.positive_state:
            out = np.where(y > 0, out, 0.0)
        return float(out) if scalar else out

    dt = delta / substeps
    out = np.empty(y.shape)
    flat_x, flat_y, flat_out = x.ravel(), y.ravel(), out.ravel()
    for xi in np.unique(flat_x):
        mask = flat_x == xi
        grid, density = _chapman_kolmogorov(model, float(xi), delta, dt, substeps, theta, grid_size)
        flat_out[mask] = np.interp(flat_y[mask], grid, density, left=0.0, right=0.0)
    out = flat_out.reshape(y.shape)
    return float(out) if scalar else out


def _chapman_kolmogorov(
    model: DiffusionModel, x: float, delta: float, dt: float, substeps: int, theta: ParamVector, grid_size: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Density after `substeps` Euler sub-steps from x, tabulated on a grid."""
    xa = np.array(x)
    end_mean = x + float(model._drift(xa, theta)) * delta
    end_sd = float(model._sigma(xa, theta)) * np.sqrt(delta)
    lo = min(x, end_mean) - 10.0 * end_sd
    hi = max(x, end_mean) + 10.0 * end_sd
    if model.positive_state:
        lo = max(lo, model.state_floor)
    grid = np.linspace(lo, hi, grid_size)
    weights = np.full(grid_size, grid[1] - grid[0])
    weights[[0, -1]] *= 0.5
    first_mean = x + float(model._drift(xa, theta)) * dt
    density = stats.norm.pdf(grid, first_mean, float(model._sigma(xa, theta)) * np.sqrt(dt))
    step_mean = grid + model._drift(grid, theta) * dt
    step_sd = model._sigma(grid, theta) * np.sqrt(dt)
    kernel = stats.norm.pdf(grid[None, :], loc=step_mean[:, None], scale=step_sd[:, None])
    for _ in range(substeps - 1):
        density = (density * weights) @ kernel
    return grid, density


class Vasicek(DiffusionModel):
    """Vasicek (Ornstein-Uhlenbeck) model dX = kappa (alpha - X) dt + sigma dB.

    Parameters are (kappa, alpha, sigma2).

    Examples
    --------
    >>> model = Vasicek()
    >>> theta = model.params({"kappa": 0.85837, "alpha": 0.089102, "sigma2": 0.0021854})
    >>> float(model.drift(0.089102, theta))
    0.0
    """

    family = Family.VASICEK
    param_names = ("kappa", "alpha", "sigma2")
    param_domain = ((0.0, np.inf), (-np.inf, np.inf), (0.0, np.inf))
    density_kind = DensityKind.EXACT
    positive_state = False

    def _drift(self, x, theta):
        return theta["kappa"] * (theta["alpha"] - x)

    def _sigma(self, x, theta):
        return np.full(np.shape(x), np.sqrt(theta["sigma2"])) if np.ndim(x) else np.sqrt(theta["sigma2"])

    def moments(self, x, delta: float, theta: ThetaLike) -> Tuple[np.ndarray, float]:
        """Conditional mean and variance of X_{t+delta} given X_t = x."""
        theta = self.params(theta, allow_degenerate=True)
        kappa, alpha, sigma2 = theta.values
        decay = np.exp(-kappa * delta)
        mean = alpha + (np.asarray(x, dtype=float) - alpha) * decay
        var = sigma2 * (1.0 - decay**2) / (2.0 * kappa)
        return mean, var

    def log_transition_density(self, y, x, delta, theta):
        """Gaussian Ornstein-Uhlenbeck transition density (log scale)."""
        theta = self.params(theta)
        mean, var = self.moments(x, delta, theta)
        return stats.norm.logpdf(y, loc=mean, scale=np.sqrt(var))

    def stationary_density(self, x, theta):
        """N(alpha, sigma2 / (2 kappa)) density."""
        theta = self.params(theta)
        kappa, alpha, sigma2 = theta.values
        return stats.norm.pdf(x, loc=alpha, scale=np.sqrt(sigma2 / (2 * kappa)))

    def sample_stationary(self, theta, rng, size=None):
        """Normal draw."""
        theta = self.params(theta, allow_degenerate=True)
        kappa, alpha, sigma2 = theta.values
        return rng.normal(alpha, np.sqrt(sigma2 / (2 * kappa)), size=size)

    def exact_step(self, x, delta, theta, rng):
        """Exact Gaussian AR(1) update."""
        mean, var = self.moments(x, delta, theta)
        if np.ndim(mean) == 0:
            return float(mean + np.sqrt(var) * rng.standard_normal())
        return mean + np.sqrt(var) * rng.standard_normal(np.shape(mean))

    def initial_guess(self, path):
        """AR(1) starting values (kappa, alpha, sigma2)."""
        kappa, alpha, resid = _ar1_start(path)
        slope = np.exp(-kappa * path.delta)
        sigma2 = 2 * kappa * np.mean(resid**2) / (1 - slope**2)
        return np.array([kappa, alpha, sigma2])

    def closed_form_fit(self, path: ObservedPath):
        """Exact-likelihood maximizer through the Gaussian AR(1) representation.

        Returns
        -------
        tuple
            (theta, converged); converged is False when the AR(1) slope is outside (0, 1) and had to be
            clipped.
        """
        x, y = path.x, path.y
        xm, ym = x.mean(), y.mean()
        sxx = np.sum((x - xm) ** 2)
        if sxx == 0:
            return None
        slope = np.sum((x - xm) * (y - ym)) / sxx
        intercept = ym - slope * xm
        converged = bool(0 < slope < 1)
        slope = float(np.clip(slope, 1e-10, 1 - 1e-10))
        if not converged:
            intercept = ym - slope * xm
        resid = y - intercept - slope * x
        var = float(np.mean(resid**2))
        kappa = -np.log(slope) / path.delta
        alpha = intercept / (1 - slope)
        sigma2 = 2 * kappa * var / (1 - slope**2)
        return self.params([kappa, alpha, sigma2], allow_degenerate=True), converged


class CIR(DiffusionModel):
    """Cox-Ingersoll-Ross model dX = kappa (alpha - X) dt + sigma sqrt(X) dB.

    Parameters are (kappa, alpha, sigma2).

    Examples
    --------
    >>> model = CIR()
    >>> round(float(model.drift(0.05, (0.89218, 0.09045, 0.032742))), 6)
    0.036089
    """

    family = Family.CIR
    param_names = ("kappa", "alpha", "sigma2")
    param_domain = ((0.0, np.inf), (0.0, np.inf), (0.0, np.inf))
    density_kind = DensityKind.EXACT
    diffusion_power = 0.5

    def _drift(self, x, theta):
        return theta["kappa"] * (theta["alpha"] - x)

    def _sigma(self, x, theta):
        return np.sqrt(theta["sigma2"] * np.maximum(x, 0.0))

    @staticmethod
    def _constants(delta: float, theta: ParamVector) -> Tuple[float, float, float]:
        kappa, alpha, sigma2 = theta.values
        decay = np.exp(-kappa * delta)
        c = 2 * kappa / (sigma2 * (1 - decay))
        q = 2 * kappa * alpha / sigma2 - 1
        return c, q, decay

    def feller(self, theta: ThetaLike) -> bool:
        """True if 2 kappa alpha > sigma2 (the path stays strictly positive)."""
        kappa, alpha, sigma2 = self.params(theta).values
        return 2 * kappa * alpha > sigma2

    def log_transition_density(self, y, x, delta, theta):
        """Noncentral chi-square transition density (log scale).

        The modified Bessel function enters through the exponentially scaled I_q, so large noncentrality
        never overflows; entries where the scaled Bessel value under- or overflows are taken from the
        noncentral chi-square log-density.
        """
        theta = self.params(theta)
        y, x = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(x, dtype=float))
        self.check_state(x)
        c, q, decay = self._constants(delta, theta)
        u = c * x * decay
        out = np.full(y.shape, -np.inf)
        pos = y > 0
        if np.any(pos):
            v = c * y[pos]
            up = u[pos]
            z = 2.0 * np.sqrt(up * v)
            with np.errstate(divide="ignore", invalid="ignore"):
                log_bessel = np.log(special.ive(q, z)) + z
                value = np.log(c) - up - v + 0.5 * q * (np.log(v) - np.log(up)) + log_bessel
            bad = ~np.isfinite(value)
            if np.any(bad):
                value[bad] = stats.ncx2.logpdf(2 * v[bad], df=2 * q + 2, nc=2 * up[bad]) + np.log(2 * c)
            out[pos] = value
        return float(out) if out.ndim == 0 else out

    def stationary_density(self, x, theta):
        """Gamma(2 kappa alpha / sigma2, rate 2 kappa / sigma2) density."""
        kappa, alpha, sigma2 = self.params(theta).values
        return stats.gamma.pdf(x, a=2 * kappa * alpha / sigma2, scale=sigma2 / (2 * kappa))

    def sample_stationary(self, theta, rng, size=None):
        """Gamma draw."""
        kappa, alpha, sigma2 = self.params(theta).values
        return rng.gamma(2 * kappa * alpha / sigma2, sigma2 / (2 * kappa), size=size)

    def exact_step(self, x, delta, theta, rng):
        """Exact step: a scaled noncentral chi-square (Poisson mixture of central chi-squares)."""
        c, q, decay = self._constants(delta, theta)
        out = rng.noncentral_chisquare(2 * q + 2, 2 * c * np.asarray(x, dtype=float) * decay) / (2 * c)
        return float(out) if np.ndim(out) == 0 else out

    def initial_guess(self, path):
        """AR(1) starting values (kappa, alpha, sigma2)."""
        kappa, alpha, resid = _ar1_start(path)
        sigma2 = float(np.mean(resid**2 / path.x) / path.delta)
        return np.array([kappa, alpha, sigma2])


class ICIR(DiffusionModel):
    """Inverse CIR model dX = X (kappa - (sigma^2 - kappa alpha) X) dt + sigma X^{3/2} dB.

    Parameters are (kappa, alpha, sigma).
    """

    family = Family.ICIR
    param_names = ("kappa", "alpha", "sigma")
    param_domain = ((0.0, np.inf), (0.0, np.inf), (0.0, np.inf))
    diffusion_power = 1.5

    def _drift(self, x, theta):
        kappa, alpha, sigma = theta.values
        return x * (kappa - (sigma**2 - kappa * alpha) * x)

    def _sigma(self, x, theta):
        return theta["sigma"] * np.maximum(x, 0.0) ** 1.5

    def anchor(self, theta):
        """Positive root of the drift when it exists, alpha otherwise."""
        kappa, alpha, sigma = theta.values
        curvature = sigma**2 - kappa * alpha
        return kappa / curvature if curvature > 0 else alpha

    def initial_guess(self, path):
        """Regression of the increments on (X, X^2) for the drift, residual scale for sigma."""
        x = path.x
        dx = (path.y - x) / path.delta
        design = np.column_stack([x, x**2])
        (b1, b2), *_ = np.linalg.lstsq(design, dx, rcond=None)
        resid = path.y - x - design @ np.array([b1, b2]) * path.delta
        sigma = np.sqrt(np.mean(resid**2 / x**3) / path.delta)
        kappa = b1 if b1 > 0 else 1.0
        alpha = (sigma**2 + b2) / kappa
        if not alpha > 0:
            alpha = 1.0 / np.mean(path.values)
        return np.array([kappa, alpha, sigma])


class CEV(DiffusionModel):
    """Constant elasticity of variance model dX = kappa (alpha - X) dt + sigma X^rho dB.

    Parameters are (kappa, alpha, sigma, rho).
    """

    family = Family.CEV
    param_names = ("kappa", "alpha", "sigma", "rho")
    param_domain = ((0.0, np.inf), (0.0, np.inf), (0.0, np.inf), (0.0, 3.0))

    def _drift(self, x, theta):
        return theta["kappa"] * (theta["alpha"] - x)

    def _sigma(self, x, theta):
        return theta["sigma"] * np.maximum(x, 0.0) ** theta["rho"]

    def initial_guess(self, path):
        """AR(1) drift start; rho and sigma from the regression of log squared residuals on log X."""
        kappa, alpha, resid = _ar1_start(path)
        keep = resid != 0
        slope, intercept = np.polyfit(np.log(path.x[keep]), np.log(resid[keep] ** 2), 1)
        rho = float(np.clip(slope / 2, 0.1, 2.5))
        sigma = np.sqrt(np.mean(resid**2 / path.x ** (2 * rho)) / path.delta)
        return np.array([kappa, alpha, sigma, rho])


class NLDrift(DiffusionModel):
    """Nonlinear-drift model dX = (a_{-1}/X + a_0 + a_1 X + a_2 X^2) dt + sigma X^{3/2} dB.

    Parameters are (a_m1, a0, a1, a2, sigma).
    """

    family = Family.NLDRIFT
    param_names = ("a_m1", "a0", "a1", "a2", "sigma")
    param_domain = ((-np.inf, np.inf),) * 4 + ((0.0, np.inf),)
    diffusion_power = 1.5

    def _drift(self, x, theta):
        a_m1, a0, a1, a2, _ = theta.values
        return a_m1 / x + a0 + a1 * x + a2 * x**2

    def _sigma(self, x, theta):
        return theta["sigma"] * np.maximum(x, 0.0) ** 1.5

    def anchor(self, theta):
        """Positive root of the drift where the drift crosses from positive to negative."""
        a_m1, a0, a1, a2, _ = theta.values
        roots = np.roots([a2, a1, a0, a_m1]) if a2 != 0 else np.roots([a1, a0, a_m1])
        stable = [
            r.real
            for r in roots
            if abs(r.imag) < 1e-12 and r.real > 0 and float(self._drift(np.array(r.real * 1.001), theta)) < 0
        ]
        return float(min(stable)) if stable else 0.1

    def initial_guess(self, path):
        """Least squares of the increments on (1/X, 1, X, X^2), residual scale for sigma."""
        x = path.x
        dx = (path.y - x) / path.delta
        design = np.column_stack([1 / x, np.ones_like(x), x, x**2])
        coef, *_ = np.linalg.lstsq(design, dx, rcond=None)
        resid = path.y - x - design @ coef * path.delta
        sigma = np.sqrt(np.mean(resid**2 / x**3) / path.delta)
        return np.append(coef, sigma)


MODELS = {
    Family.VASICEK: Vasicek,
    Family.CIR: CIR,
    Family.ICIR: ICIR,
    Family.CEV: CEV,
    Family.NLDRIFT: NLDrift,
}

MODEL_PRESETS: Dict[str, Tuple[Family, Dict[str, float]]] = {
    "vasicek-2": (Family.VASICEK, {"kappa": 4 * 0.85837, "alpha": 0.089102, "sigma2": 4 * 0.0021854}),
    "vasicek0": (Family.VASICEK, {"kappa": 0.85837, "alpha": 0.089102, "sigma2": 0.0021854}),
    "vasicek2": (Family.VASICEK, {"kappa": 0.85837 / 4, "alpha": 0.089102, "sigma2": 0.0021854 / 4}),
    "cir0": (Family.CIR, {"kappa": 0.89218, "alpha": 0.09045, "sigma2": 0.032742}),
    "cir1": (Family.CIR, {"kappa": 0.44609, "alpha": 0.09045, "sigma2": 0.016371}),
    "cir2": (Family.CIR, {"kappa": 0.22305, "alpha": 0.09045, "sigma2": 0.008186}),
}


def get_model(family: Union[str, Family], **kwargs) -> DiffusionModel:
    """Create a model of a family.

    Parameters
    ----------
    family: str or Family
        One of "vasicek", "cir", "icir", "cev", "nldrift".
    **kwargs:
        Passed to the model constructor (e.g. `euler_substeps`).

    Returns
    -------
    DiffusionModel

    Examples
    --------
    >>> get_model("cir").param_names
    ('kappa', 'alpha', 'sigma2')
    """
    try:
        family = family if isinstance(family, Family) else Family(str(family).lower())
    except ValueError:
        raise ParameterDomainError(f"Unknown model family: {family}, available: {[f.value for f in Family]}")
    return MODELS[family](**kwargs)


def preset_model(name: str, **kwargs) -> Tuple[DiffusionModel, ParamVector]:
    """Model and parameters of a named design (e.g. "vasicek0", "cir0")."""
    if name not in MODEL_PRESETS:
        raise ParameterDomainError(f"Unknown model preset: {name}, available: {list(MODEL_PRESETS)}")
    family, theta = MODEL_PRESETS[name]
    model = get_model(family, **kwargs)
    return model, model.params(theta)
