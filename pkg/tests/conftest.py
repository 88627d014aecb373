"""Shared fixtures: small ensembles reused across test modules.

Session-scoped stores are treated as read-only by every test."""

import pytest
from hypothesis import HealthCheck, settings

from cosim.config import default_config
from cosim.engine import build_model, run_simulation

settings.register_profile(
    "suite", deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")


@pytest.fixture(scope="session")
def small_3n_config():
    return default_config(particles=64, weeks=30, seed=7)


@pytest.fixture(scope="session")
def small_3n_store(small_3n_config):
    return run_simulation(build_model(small_3n_config), small_3n_config)


@pytest.fixture(scope="session")
def small_4n_config():
    return default_config(particles=64, weeks=30, seed=7, narratives=4)


@pytest.fixture(scope="session")
def small_4n_store(small_4n_config):
    return run_simulation(build_model(small_4n_config), small_4n_config)


@pytest.fixture(scope="session")
def mid_3n_config():
    return default_config(particles=2000, weeks=156, seed=1)


@pytest.fixture(scope="session")
def mid_3n_store(mid_3n_config):
    return run_simulation(build_model(mid_3n_config), mid_3n_config)
