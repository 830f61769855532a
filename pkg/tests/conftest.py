import numpy as np
import pytest

from xyzot import kernels
from xyzot.constants import default_constants


@pytest.fixture(scope="session")
def k():
    return default_constants()


@pytest.fixture(params=kernels.available())
def backend(request):
    with kernels.backend(request.param) as mod:
        yield mod


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
