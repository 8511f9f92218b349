import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import symstat as ss

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def normal():
    return ss.normal()


@pytest.fixture(scope="session")
def uniform():
    return ss.uniform()


@pytest.fixture(scope="session")
def rademacher():
    return ss.rademacher()


@pytest.fixture(scope="session")
def three_point():
    # asymmetric support so no accidental moment vanishes
    return ss.finite([[-1.0, 0.25], [0.0, 0.5], [2.0, 0.25]])


def random_finite(rng, max_points: int = 4) -> "ss.Distribution":
    """A random finite law with distinct points and strictly positive probs."""
    k = int(rng.integers(2, max_points + 1))
    pts = np.sort(rng.uniform(-2.0, 2.0, size=k))
    while np.min(np.diff(pts)) < 1e-3:
        pts = np.sort(rng.uniform(-2.0, 2.0, size=k))
    pr = rng.uniform(0.2, 1.0, size=k)
    pr = pr / pr.sum()
    return ss.finite(list(zip(pts.tolist(), pr.tolist())))
