import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def systems():
    """Eigensystems shared across tests, keyed by (alpha, N)."""
    from degwave.spectrum import build_eigensystem

    cache = {}

    def get(alpha, N):
        key = (float(alpha), int(N))
        if key not in cache:
            cache[key] = build_eigensystem(alpha, N)
        return cache[key]

    return get


def power_mu(alpha):
    return lambda x: np.asarray(x, dtype=float) ** (2.0 - alpha)
