import numpy as np
import pytest

from wavelab.spectral import RadialGrid


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("WAVELAB_SEED", "WAVELAB_THREADS", "WAVELAB_LOG_LEVEL", "WAVELAB_DATA_DIR"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def grid():
    return RadialGrid(256, 16.0)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
