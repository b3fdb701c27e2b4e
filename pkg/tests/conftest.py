import os

import numpy as np
import pytest

from wind_socopf.config import Config
from wind_socopf.core.network import load_case
from wind_socopf.core.windcost import GmmModel

CASE_DIR = os.getenv("SOCOPF_CASE_DIR")


def make_config(root, **sections) -> Config:
    overrides = {
        "logging": {"log_dir": str(root / "logs"), "level": "WARNING"},
        "output": {"dir": str(root / "out")},
    }
    for name, values in sections.items():
        overrides.setdefault(name, {}).update(values)
    return Config(overrides=overrides)


@pytest.fixture(scope="session")
def config_factory():
    return make_config


@pytest.fixture
def config(tmp_path) -> Config:
    return make_config(tmp_path)


@pytest.fixture(scope="session")
def case3():
    return load_case("case3")


@pytest.fixture(scope="session")
def case9():
    return load_case("case9")


@pytest.fixture(scope="session")
def case14():
    return load_case("case14")


@pytest.fixture
def external_case():
    """Path of a case under $SOCOPF_CASE_DIR, skipping when it is not available"""

    def _path(name: str) -> str:
        if not CASE_DIR:
            pytest.skip("SOCOPF_CASE_DIR not set")
        path = os.path.join(CASE_DIR, f"{name}.m")
        if not os.path.exists(path):
            pytest.skip(f"{path} not found")
        return path

    return _path


@pytest.fixture
def bimodal_gmm() -> GmmModel:
    return GmmModel(
        weights=np.array([0.4, 0.6]),
        means=np.array([40.0, 70.0]),
        stddevs=np.array([8.0, 10.0]),
        support_max=100.0,
    )


@pytest.fixture(scope="session")
def wind_samples() -> np.ndarray:
    rng = np.random.default_rng(7)
    first = rng.normal(30.0, 6.0, size=4000)
    second = rng.normal(75.0, 9.0, size=6000)
    return np.clip(np.concatenate([first, second]), 0.0, 120.0)
