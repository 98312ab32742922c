import numpy as np
import pytest

from wetsim.core.models import SeedSpec, TimeGrid
from wetsim.static_models.models import StripPotential
from wetsim.utils.parallel import ReplicaExecutor


@pytest.fixture(autouse=True)
def executor():
    """Every test runs on a single thread with four replica chunks"""
    yield ReplicaExecutor.configure(threads=1, chunks=4)
    ReplicaExecutor.configure(threads=1)


@pytest.fixture
def seed() -> SeedSpec:
    return SeedSpec(master_seed=20240501)


@pytest.fixture
def strip_potential() -> StripPotential:
    return StripPotential(a=0.5, beta=1.0)


@pytest.fixture
def unit_grid() -> TimeGrid:
    return TimeGrid(steps=1000)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
