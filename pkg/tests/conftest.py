import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from semiflow_lab.base import BaseGrid
from semiflow_lab.config import reference
from semiflow_lab.models import doubling_map
from semiflow_lab.renewal import RenewalOperators
from semiflow_lab.roof import constant_roof, cosine_roof
from semiflow_lab.suspension import ObservableSpec, SuspensionGrid, build_test_observable

settings.register_profile("lab", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("lab")


@pytest.fixture(scope="session")
def scenario():
    return reference()


@pytest.fixture(scope="session")
def model():
    return doubling_map()


@pytest.fixture(scope="session")
def roof():
    return cosine_roof()


@pytest.fixture(scope="session")
def base(model):
    return BaseGrid(model, 64)


@pytest.fixture(scope="session")
def grid(base, roof):
    return SuspensionGrid(base, roof)


@pytest.fixture(scope="session")
def flat_grid(base):
    return SuspensionGrid(base, constant_roof(2.0))


@pytest.fixture(scope="session")
def ops(grid):
    return RenewalOperators(grid, eps=0.1)


@pytest.fixture(scope="session")
def v_ref(grid):
    return build_test_observable(grid, ObservableSpec())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def masked_sup(grid, x):
    return float(np.max(np.abs(np.where(grid.mask, x, 0))))
