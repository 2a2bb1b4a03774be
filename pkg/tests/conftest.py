import numpy as np
import pytest

from ifacesim.kernel import NEAREST_NEIGHBOR, RANGE_TWO, make_kernel


@pytest.fixture
def k2():
    return RANGE_TWO


@pytest.fixture
def nn():
    return NEAREST_NEIGHBOR


@pytest.fixture
def skew():
    # mean zero but not symmetric
    return make_kernel([(-3, 0.1), (-1, 0.4), (1, 0.3), (2, 0.2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
