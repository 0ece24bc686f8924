import numpy as np
import pytest

from lewisw.config import CONFIG_ENV


@pytest.fixture
def rng():
    return np.random.default_rng(20250101)


@pytest.fixture
def triangle():
    """Three rows spanning R^2: e1, e2 and e1 + e2."""
    return np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


@pytest.fixture
def column():
    return np.array([[1.0], [1.0]])


@pytest.fixture
def gaussian(rng):
    def make(m, n):
        return rng.standard_normal((m, n))

    return make


@pytest.fixture(autouse=True)
def isolated_config(monkeypatch, tmp_path):
    # Never pick up a user config file or one set by an earlier CLI invocation
    monkeypatch.setenv(CONFIG_ENV, str(tmp_path / "missing-config.toml"))
