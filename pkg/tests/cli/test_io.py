from pathlib import Path

import numpy as np
import pytest

from diffusion_el.cli.io import ingest_series, write_path
from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import CIR, Vasicek
from diffusion_el.utils.errors import DataFormatError

MONTHLY = 1 / 12


def _write(tmp_path: Path, text: str, name: str = "data.txt") -> Path:
    file_path = tmp_path / name
    file_path.write_text(text)
    return file_path


class TestIngestSeries:

    def test_one_value_per_line(self, series_file: Path, short_path: ObservedPath):
        path = ingest_series(series_file, MONTHLY)
        assert len(path) == len(short_path)
        np.testing.assert_array_equal(path.values, short_path.values)
        assert path.delta == MONTHLY
        assert path.metadata["source"] == str(series_file)

    def test_header_and_blank_lines(self, tmp_path: Path):
        path = ingest_series(_write(tmp_path, "rate\n0.05\n\n0.06\n0.07\n"), MONTHLY)
        np.testing.assert_array_equal(path.values, [0.05, 0.06, 0.07])

    def test_csv_columns(self, tmp_path: Path):
        file_path = _write(tmp_path, "date,rate\n2000-01,0.05\n2000-02,0.06\n2000-03,0.07\n", "rates.csv")
        np.testing.assert_array_equal(ingest_series(file_path, MONTHLY).values, [0.05, 0.06, 0.07])
        np.testing.assert_array_equal(ingest_series(file_path, MONTHLY, column="rate").values, [0.05, 0.06, 0.07])
        with pytest.raises(DataFormatError, match="line 2"):
            ingest_series(file_path, MONTHLY, column="date")
        with pytest.raises(DataFormatError, match="not found"):
            ingest_series(file_path, MONTHLY, column="yield")

    def test_non_numeric_line(self, tmp_path: Path):
        with pytest.raises(DataFormatError, match="line 3: not a finite number: 'abc'") as info:
            ingest_series(_write(tmp_path, "0.05\n0.06\nabc\n0.07\n"), MONTHLY)
        assert info.value.line == 3

    def test_non_finite_line(self, tmp_path: Path):
        with pytest.raises(DataFormatError, match="line 2"):
            ingest_series(_write(tmp_path, "0.05\ninf\n0.07\n"), MONTHLY)

    def test_positive_model(self, tmp_path: Path):
        file_path = _write(tmp_path, "0.05\n0.01\n-0.01\n0.02\n")
        assert ingest_series(file_path, MONTHLY, Vasicek()).n == 3
        with pytest.raises(DataFormatError, match="line 3: the cir model needs positive observations"):
            ingest_series(file_path, MONTHLY, CIR())

    def test_too_short(self, tmp_path: Path):
        with pytest.raises(DataFormatError, match="at least 3"):
            ingest_series(_write(tmp_path, "0.05\n0.06\n"), MONTHLY)

    def test_missing_and_empty_files(self, tmp_path: Path):
        with pytest.raises(DataFormatError, match="does not exist"):
            ingest_series(tmp_path / "missing.txt", MONTHLY)
        with pytest.raises(DataFormatError, match="empty"):
            ingest_series(_write(tmp_path, ""), MONTHLY)


def test_write_path(tmp_path: Path, short_path: ObservedPath):
    file_path = write_path(short_path, tmp_path / "out" / "path.csv")
    assert file_path.read_text().splitlines()[0] == "value"
    path = ingest_series(file_path, MONTHLY)
    np.testing.assert_array_equal(path.values, short_path.values)
