import numpy as np
import pandas as pd
import pytest

from diffusion_el.models.path import ObservedPath


def test_observed_path():
    path = ObservedPath([0.05, 0.051, 0.049, 0.05], delta=1 / 12)
    assert path.n == 3
    assert len(path) == 4
    np.testing.assert_array_equal(path.x, [0.05, 0.051, 0.049])
    np.testing.assert_array_equal(path.y, [0.051, 0.049, 0.05])
    assert path.pairs().shape == (3, 2)
    assert not path.values.flags.writeable


def test_from_series():
    path = ObservedPath.from_series(pd.Series([0.1, 0.2, 0.3]), delta=1.0)
    assert path.n == 2
    frame = path.to_frame()
    assert list(frame.columns) == ["t", "value"]
    assert frame["t"].tolist() == [1, 2, 3]


@pytest.mark.parametrize(
    "values, delta",
    [
        ([0.1, 0.2], 1.0),
        ([0.1, np.nan, 0.3], 1.0),
        ([0.1, np.inf, 0.3], 1.0),
        ([0.1, 0.2, 0.3], 0.0),
        ([0.1, 0.2, 0.3], -1 / 12),
    ],
)
def test_invalid_path(values, delta):
    with pytest.raises(ValueError):
        ObservedPath(values, delta)
