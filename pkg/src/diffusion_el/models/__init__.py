"""Parametric diffusion models, sample paths and maximum likelihood fitting."""

from diffusion_el.models.estimation import FitMethod, FitResult, fit_mle
from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import (
    CEV,
    CIR,
    ICIR,
    MODEL_PRESETS,
    DensityKind,
    DiffusionModel,
    Family,
    NLDrift,
    ParamVector,
    Vasicek,
    euler_transition_density,
    get_model,
    preset_model,
)

__all__ = [
    "CEV",
    "CIR",
    "ICIR",
    "MODEL_PRESETS",
    "DensityKind",
    "DiffusionModel",
    "Family",
    "FitMethod",
    "FitResult",
    "NLDrift",
    "ObservedPath",
    "ParamVector",
    "Vasicek",
    "euler_transition_density",
    "fit_mle",
    "get_model",
    "preset_model",
]
