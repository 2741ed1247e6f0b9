"""
Pytest configuration and fixtures for knowbal tests.
"""

import pytest

from knowbal.ontic import SystemShape, from_cells
from knowbal.ontic_sim import RunConfig
from knowbal.protocols import ProtocolContext
from knowbal.validity import CatalogStore


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: builds the three-system catalog or the full pair group")


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Catalog cache shared by the whole session."""
    return tmp_path_factory.mktemp("knowbal-cache")


@pytest.fixture(scope="session")
def store(cache_dir):
    return CatalogStore(cache_dir)


@pytest.fixture(scope="session")
def catalog1(store):
    return store.load_or_build(SystemShape(1))


@pytest.fixture(scope="session")
def catalog2(store):
    return store.load_or_build(SystemShape(2))


@pytest.fixture(scope="session")
def catalog3(store):
    return store.load_or_build(SystemShape(3))


@pytest.fixture(scope="session")
def ctx(store):
    """Protocol context with a reduced trial count."""
    return ProtocolContext(store, RunConfig(seed=7, n_trials=2000))


@pytest.fixture
def one():
    return SystemShape(1)


@pytest.fixture
def two():
    return SystemShape(2)


@pytest.fixture
def diagonal(two):
    return from_cells(two, [(x, x) for x in (1, 2, 3, 4)])
