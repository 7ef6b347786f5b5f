"""Errors module."""

from typing import Optional


class DiffusionElError(Exception):
    """Base class of the package errors."""

    def __init__(self, error_message: str):
        """__init__."""
        super().__init__(error_message)
        self.error_message = error_message


class ParameterDomainError(DiffusionElError, ValueError):
    """A parameter vector or a state lies outside the model domain."""


class ModelNotStationaryError(DiffusionElError):
    """The stationary density of the model is not integrable."""


class ConvexHullError(DiffusionElError):
    """The EL target lies outside the convex hull of the kernel products."""


class DegenerateWindowError(DiffusionElError):
    """The local-linear window has a (numerically) singular design."""


class EstimationError(DiffusionElError):
    """The likelihood can not be evaluated or maximized."""


class BootstrapAbortError(DiffusionElError):
    """Too many bootstrap replicates failed."""


class StudyAbortError(DiffusionElError):
    """Too many Monte Carlo repetitions failed."""


class ConfigError(DiffusionElError, ValueError):
    """Invalid configuration."""


class DataFormatError(DiffusionElError, ValueError):
    """DataFormatError.

    Parameters
    ----------
    error_message: str
        The error message.
    line: int, optional
        1-based line number of the offending entry in the input file.
    """

    def __init__(self, error_message: str, line: Optional[int] = None):
        """__init__."""
        if line is not None:
            error_message = f"line {line}: {error_message}"
        super().__init__(error_message)
        self.line = line
