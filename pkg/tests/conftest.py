import numpy as np
import pytest

from schauderlab.domain_grid import make_grid


@pytest.fixture(scope="session")
def grid65():
    return make_grid(2, 1.0, 65)


@pytest.fixture(scope="session")
def grid129():
    return make_grid(2, 1.0, 129)


@pytest.fixture(scope="session")
def grid257():
    return make_grid(2, 1.0, 257)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
