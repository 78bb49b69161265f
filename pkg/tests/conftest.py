import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


@pytest.fixture(params=["numba", "numpy"])
def backend(request, monkeypatch):
    """Run a test once per kernel backend, selecting numpy through the env flag."""
    if request.param == "numpy":
        monkeypatch.setenv("SYNCLAB_DISABLE_NUMBA", "1")
    else:
        monkeypatch.delenv("SYNCLAB_DISABLE_NUMBA", raising=False)
    return request.param
