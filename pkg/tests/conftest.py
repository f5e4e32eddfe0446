import numpy as np
import pytest

from reinsopt import default_config


@pytest.fixture(scope="session")
def cfg():
    """Default two-regime configuration shared across tests."""
    return default_config()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(20260810)))
