import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from paraww import GridSpec

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def g64():
    return GridSpec(d=1, N=64, Nz=33)


@pytest.fixture
def g128():
    return GridSpec(d=1, N=128, Nz=33)
