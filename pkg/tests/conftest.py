import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "nskgevrey",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("nskgevrey")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
