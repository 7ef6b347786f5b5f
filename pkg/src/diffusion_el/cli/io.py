"""Read observed series and write paths."""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import DiffusionModel
from diffusion_el.utils.errors import DataFormatError

logger = logging.getLogger(__name__)


def _read_cells(file_path: Path, column: Optional[Union[int, str]]) -> pd.Series:
    try:
        frame = pd.read_csv(file_path, header=None, dtype=str, skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise DataFormatError(f"The file {file_path} is empty")
    except pd.errors.ParserError as exc:
        raise DataFormatError(f"Cannot parse {file_path}: {exc}")
    if frame.empty:
        raise DataFormatError(f"The file {file_path} is empty")
    frame.index = np.arange(1, len(frame) + 1)
    frame = frame.dropna(how="all")
    first = frame.iloc[0]
    has_header = pd.to_numeric(first, errors="coerce").isna().all()
    if isinstance(column, str):
        if not has_header or column not in list(first):
            raise DataFormatError(f"Column {column} not found in the header of {file_path}")
        column = list(first).index(column)
    elif column is None:
        column = frame.shape[1] - 1
    if has_header:
        logger.debug(f"Skipping the header line of {file_path}: {list(first)}")
        frame = frame.iloc[1:]
    return frame.iloc[:, column]


def ingest_series(
    file_path: Union[str, Path],
    delta: float,
    model: Optional[DiffusionModel] = None,
    column: Optional[Union[int, str]] = None,
) -> ObservedPath:
    """Read one observation per line (an optional header line is skipped).

    Comma-separated files with several columns are accepted; the last column (or `column`) holds the
    observations.

    Parameters
    ----------
    file_path: str or Path
        Text or CSV file.
    delta: float
        Sampling interval in years.
    model: DiffusionModel, optional
        Model the data will be used with; positive-state families require positive values.
    column: int or str, optional
        Column index, or a header name.

    Returns
    -------
    ObservedPath

    Raises
    ------
    DataFormatError
        Naming the first offending line for non-numeric, non-finite or out-of-domain values, or when there
        are fewer than 3 observations.
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise DataFormatError(f"The data file does not exist: {file_path}")
    cells = _read_cells(file_path, column)
    values = pd.to_numeric(cells, errors="coerce")
    bad = values.isna() | ~np.isfinite(values.astype(float))
    if bad.any():
        line = int(bad.index[bad.to_numpy()][0])
        raise DataFormatError(f"not a finite number: {cells.loc[line]!r}", line=line)
    if model is not None and model.positive_state:
        nonpositive = values <= 0
        if nonpositive.any():
            line = int(values.index[nonpositive.to_numpy()][0])
            raise DataFormatError(
                f"the {model.family.value} model needs positive observations, given: {values.loc[line]}", line=line
            )
    if values.size < 3:
        raise DataFormatError(f"A path needs at least 3 observations, {file_path} has {values.size}")
    path = ObservedPath(values.to_numpy(dtype=float), delta, metadata={"source": str(file_path)})
    logger.info(f"Read {len(path)} observations from {file_path}")
    return path


def write_path(path: ObservedPath, file_path: Union[str, Path]) -> Path:
    """Write a path as a one-column CSV with the header `value`."""
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    path.to_frame()[["value"]].to_csv(file_path, index=False, float_format="%.17g")
    return file_path
