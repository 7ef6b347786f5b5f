"""Kernel smoothing."""

from diffusion_el.smoothing.estimators import (
    GridSmoother,
    SmoothedDensities,
    joint_kde,
    local_linear_weights,
    parametric_transition_matrix,
    smoothed_param_density,
    stationary_kde,
    transition_kde,
)
from diffusion_el.smoothing.kernel import BIWEIGHT, Kernel, KernelConstant, kernel_constant

__all__ = [
    "BIWEIGHT",
    "GridSmoother",
    "Kernel",
    "KernelConstant",
    "SmoothedDensities",
    "joint_kde",
    "kernel_constant",
    "local_linear_weights",
    "parametric_transition_matrix",
    "smoothed_param_density",
    "stationary_kde",
    "transition_kde",
]
