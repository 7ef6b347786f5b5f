"""Discretely observed sample paths."""

from dataclasses import dataclass, field
from typing import Dict, Sequence, Union

import numpy as np
import pandas as pd


@dataclass(frozen=True, eq=False)
class ObservedPath:
    """Equally spaced observations X_1, ..., X_{n+1} of a diffusion.

    Parameters
    ----------
    values: array-like
        The n+1 observations.
    delta: float
        Sampling interval in years (1/12 for monthly data).
    metadata: dict, optional
        Diagnostics attached by the simulator (e.g. the number of Euler floor clamps).

    Examples
    --------
    >>> path = ObservedPath([0.05, 0.051, 0.049], delta=1 / 12)
    >>> path.n
    2
    >>> path.pairs()[0].tolist()
    [0.05, 0.051]
    """

    values: np.ndarray
    delta: float
    metadata: Dict[str, Union[int, float, str]] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        """Validate the observations."""
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 3:
            raise ValueError(f"A path needs at least 3 observations, given: {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("A path must contain finite values only")
        if not self.delta > 0:
            raise ValueError(f"The sampling interval must be positive, given: {self.delta}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "delta", float(self.delta))

    def __len__(self) -> int:
        """Number of observations (n+1)."""
        return self.values.size

    @property
    def n(self) -> int:
        """Number of transitions."""
        return self.values.size - 1

    @property
    def x(self) -> np.ndarray:
        """Conditioning states X_1, ..., X_n."""
        return self.values[:-1]

    @property
    def y(self) -> np.ndarray:
        """Next states X_2, ..., X_{n+1}."""
        return self.values[1:]

    def pairs(self) -> np.ndarray:
        """Consecutive pairs (X_t, X_{t+1}) as an (n, 2) array."""
        return np.column_stack([self.x, self.y])

    @classmethod
    def from_series(cls, data: Union[Sequence[float], pd.Series], delta: float) -> "ObservedPath":
        """Create a path from a sequence or a pandas Series."""
        if isinstance(data, pd.Series):
            data = data.to_numpy(dtype=float)
        return cls(np.asarray(data, dtype=float), delta)

    def to_frame(self) -> pd.DataFrame:
        """Path as a DataFrame with the columns `t` and `value`."""
        return pd.DataFrame({"t": np.arange(1, len(self) + 1), "value": self.values})
