"""
Test Configuration

Shared fixtures:
- Seeded random generators
- Field contexts for GF(2), GF(4), GF(16) and GF(1024)
- A small experiment config that keeps campaigns at desk scale

Long Monte-Carlo checks are marked `slow` and deselected by default;
run them with `pytest -m slow`.
"""

import numpy as np
import pytest

from mmwave_nc.gf import get_field
from mmwave_nc.models import BoundsConfig, ExperimentConfig, PhiConfig, StreetScenario, TimeSpanConfig

# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------
TEST_SEED = 20240611


@pytest.fixture
def rng():
    return np.random.default_rng(TEST_SEED)


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------
@pytest.fixture(scope="session")
def gf2():
    return get_field(2)


@pytest.fixture(scope="session")
def gf4():
    return get_field(4)


@pytest.fixture(scope="session")
def gf16():
    return get_field(16)


@pytest.fixture(scope="session")
def gf1024():
    return get_field(1024)


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------
def small_config(**overrides) -> ExperimentConfig:
    """A config that runs every campaign in a few seconds."""
    config = ExperimentConfig(
        scenario=StreetScenario(n_devices=12),
        timespan=TimeSpanConfig(k=4, spans=3),
        relay_spacings=[30.0, 80.0],
        uplink_code_lengths=[2, 4],
        bounds=BoundsConfig(code_lengths=[4], p_grid=[0.0, 0.1, 0.3], max_relays=4, simulate_spans=5),
        phi=PhiConfig(code_lengths=[2], field_sizes=[2, 16], p_grid=[0.0, 0.5], trials=50),
        seed=7,
    )
    return config.model_copy(update=overrides)


@pytest.fixture
def tiny_config():
    return small_config()
