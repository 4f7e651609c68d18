import numpy as np
import pytest

from critex.fields import builtin_pert
from critex.growth import growth_summary


@pytest.fixture(scope="session")
def lap3():
    return builtin_pert(3, 0.0)


@pytest.fixture(scope="session")
def lap3_summary(lap3):
    return growth_summary(lap3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240)
