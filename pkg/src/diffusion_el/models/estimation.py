"""Maximum likelihood estimation of the diffusion parameters."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import optimize

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import DensityKind, DiffusionModel, ParamVector, ThetaLike
from diffusion_el.utils.errors import EstimationError, ParameterDomainError

logger = logging.getLogger(__name__)


class FitMethod(str, Enum):
    """How the likelihood was maximized."""

    CLOSED_FORM = "closed-form"
    NUMERICAL_EXACT_LIK = "numerical-exact-lik"
    EULER_PSEUDO_LIK = "euler-pseudo-lik"


@dataclass
class FitResult:
    """Result of a maximum likelihood fit.

    `converged` means the simplex reached the step and value tolerances (1e-8) for the numerical
    methods, and an AR(1) slope inside (0, 1) for the closed form.
    """

    theta_hat: ParamVector
    loglik: float
    converged: bool
    iterations: int
    method: FitMethod
    message: str = field(default="")

    def to_dict(self) -> dict:
        """Serializable representation."""
        return {
            "theta_hat": self.theta_hat.as_dict(),
            "loglik": self.loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "method": self.method.value,
            "message": self.message,
        }


def _negative_loglik(z: np.ndarray, model: DiffusionModel, path: ObservedPath) -> float:
    try:
        theta = model.from_unconstrained(z)
        with np.errstate(all="ignore"):
            value = model.loglik(theta, path)
    except (ParameterDomainError, FloatingPointError, ValueError, OverflowError):
        return np.inf
    return -value if np.isfinite(value) else np.inf


def fit_mle(
    model: DiffusionModel,
    path: ObservedPath,
    start: Optional[ThetaLike] = None,
    max_iter: int = 4000,
    tol: float = 1e-8,
) -> FitResult:
    """Fit the model to a path by maximum likelihood.

    Vasicek uses the closed form of the Gaussian AR(1) representation, CIR maximizes the exact
    noncentral chi-square likelihood and the other families maximize the Euler pseudo-likelihood. The
    numerical fits run a Nelder-Mead simplex on the log/logit transformed parameters from a moments
    start.

    Parameters
    ----------
    model: DiffusionModel
        Null model.
    path: ObservedPath
        Observed path.
    start: ParamVector, sequence or mapping, optional
        Starting values; default is the model's moments start.
    max_iter: int, optional, default is 4000
        Maximum number of simplex iterations.
    tol: float, optional, default is 1e-8
        Step and value tolerance of the simplex.

    Returns
    -------
    FitResult

    Raises
    ------
    EstimationError
        If no finite likelihood is found at all.
    ParameterDomainError
        If the path is outside the state space of the model.
    """
    model.check_path(path)
    if start is None:
        closed = model.closed_form_fit(path)
        if closed is not None:
            theta, converged = closed
            try:
                loglik = model.loglik(theta, path)
            except ParameterDomainError:
                # zero residual variance
                loglik = np.inf
            result = FitResult(theta, float(loglik), converged, 1, FitMethod.CLOSED_FORM)
            logger.debug(f"Closed-form fit of {model.family.value}: {theta}")
            return result

    method = FitMethod.NUMERICAL_EXACT_LIK if model.density_kind == DensityKind.EXACT else FitMethod.EULER_PSEUDO_LIK
    if start is None:
        start = _valid_start(model, path)
    else:
        start = model.params(start)
    z0 = model.to_unconstrained(start)
    if not np.isfinite(_negative_loglik(z0, model, path)):
        raise EstimationError(f"The likelihood of {model.family.value} is not finite at the start {start}")

    res = optimize.minimize(
        _negative_loglik,
        z0,
        args=(model, path),
        method="Nelder-Mead",
        options={"maxiter": max_iter, "xatol": tol, "fatol": tol, "adaptive": True},
    )
    if not np.isfinite(res.fun):
        raise EstimationError(f"The optimizer of {model.family.value} did not find a finite likelihood")
    theta = model.from_unconstrained(res.x)
    if not res.success:
        logger.warning(f"Fit of {model.family.value} did not converge: {res.message}")
    return FitResult(theta, float(-res.fun), bool(res.success), int(res.nit), method, str(res.message))


def _valid_start(model: DiffusionModel, path: ObservedPath) -> ParamVector:
    """Project the moments start into the parameter domain."""
    guess = np.asarray(model.initial_guess(path), dtype=float)
    values = []
    for name, value, (low, high) in zip(model.param_names, guess, model.param_domain):
        if not np.isfinite(value):
            value = 1.0 if np.isinf(high) else 0.5 * (low + high)
        if not np.isinf(low) and value <= low:
            value = low + (abs(low) * 0.1 or 1e-4)
        if not np.isinf(high) and value >= high:
            value = high - 0.1 * (high - low)
        values.append(value)
    return model.params(values)
