"""
Shared fixtures: the built-in example models and seeded random chains.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from current_counting.catalog import random_model, random_walk, three_state
from current_counting.core.config import Settings
from current_counting.spectral.curve import SpectralCurve

MODELS_DIR = Path(__file__).parent.parent / "config" / "models"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: contour and period computations taking several seconds")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def settings():
    return Settings()


@pytest.fixture
def three_state_model():
    """p = 1/2, q = 1/4: sector I."""
    return three_state(0.5, 0.25)


@pytest.fixture
def walk_model():
    """Biased ring with Omega = 4, q = 0.3."""
    return random_walk(4, 0.3)


@pytest.fixture
def three_state_curve(three_state_model, settings):
    return SpectralCurve(three_state_model, settings)


@pytest.fixture
def walk_curve(walk_model, settings):
    return SpectralCurve(walk_model, settings)


@pytest.fixture
def dense_model(rng):
    return random_model(4, rng)


@pytest.fixture
def models_dir():
    return MODELS_DIR
