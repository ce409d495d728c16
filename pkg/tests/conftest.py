import numpy as np
import pytest

from grid import ROUTER, PpgTopology, build_default_topology
from utils.models import GridConfig, GpSettings, ScenarioConfig

# cross-section giving exactly 1% loss per hop with the default P/V ratings
ONE_PERCENT_LOSS = GridConfig(cross_section=2.15625)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def default_topology():
    return build_default_topology(18)


@pytest.fixture
def two_leaf_topology():
    """Two BSs hanging directly off the router, 1% loss per hop."""
    return PpgTopology({0: ROUTER, 1: ROUTER}, ONE_PERCENT_LOSS)


@pytest.fixture
def small_scenario():
    """Six BSs in two branches, one day."""
    return ScenarioConfig(n_bs=6, ongrid=[0, 3], days=1, grid=GridConfig(branches=2))


@pytest.fixture
def predictive_scenario():
    return ScenarioConfig(
        n_bs=3, ongrid=[0], days=1, horizon=6, grid=GridConfig(branches=1),
        gp=GpSettings(window=48, grid=[1.0]),
    )


@pytest.fixture
def write_text(tmp_path):
    def _write(name: str, text: str):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write
