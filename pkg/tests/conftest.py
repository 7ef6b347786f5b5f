from pathlib import Path

import numpy as np
import pytest

from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import CIR, MODEL_PRESETS, ParamVector, Vasicek
from diffusion_el.statistic.region import REGION_PRESETS, Region
from diffusion_el.utils.helper_functions import derive_rng

MONTHLY = 1.0 / 12.0


@pytest.fixture(scope="session")
def vasicek() -> Vasicek:
    return Vasicek()


@pytest.fixture(scope="session")
def vasicek_theta(vasicek: Vasicek) -> ParamVector:
    return vasicek.params(MODEL_PRESETS["vasicek0"][1])


@pytest.fixture(scope="session")
def cir() -> CIR:
    return CIR()


@pytest.fixture(scope="session")
def cir_theta(cir: CIR) -> ParamVector:
    return cir.params(MODEL_PRESETS["cir0"][1])


def _stationary_path(model, theta, n: int, seed: int) -> ObservedPath:
    rng = derive_rng(seed)
    x0 = float(model.sample_stationary(theta, rng))
    return model.simulate_path(theta, n, MONTHLY, x0, rng)


@pytest.fixture(scope="session")
def vasicek_path(vasicek: Vasicek, vasicek_theta: ParamVector) -> ObservedPath:
    """250 monthly transitions of the vasicek0 design."""
    return _stationary_path(vasicek, vasicek_theta, 250, 20240611)


@pytest.fixture(scope="session")
def short_path(vasicek: Vasicek, vasicek_theta: ParamVector) -> ObservedPath:
    """100 monthly transitions, small enough for bootstrap runs."""
    return _stationary_path(vasicek, vasicek_theta, 100, 7)


@pytest.fixture(scope="session")
def cir_path(cir: CIR, cir_theta: ParamVector) -> ObservedPath:
    return _stationary_path(cir, cir_theta, 250, 31)


@pytest.fixture()
def vasicek_region() -> Region:
    return REGION_PRESETS["vasicek0"]


@pytest.fixture()
def small_grid() -> tuple:
    return (10, 10)


@pytest.fixture()
def series_file(tmp_path: Path, short_path: ObservedPath) -> Path:
    """The short path written one value per line."""
    file_path = tmp_path / "series.txt"
    file_path.write_text("\n".join(f"{value:.17g}" for value in short_path.values) + "\n")
    return file_path


@pytest.fixture()
def rng() -> np.random.Generator:
    return derive_rng(12345)
