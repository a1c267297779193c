"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from crystal_current import HaldaneModel


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)


@pytest.fixture(scope="session")
def insulator():
    """Trivial insulator: g = 1, t2 = 0, mu_F = 0."""
    return HaldaneModel(1.0, 0.0), 0.0


@pytest.fixture(scope="session")
def chern_insulator():
    """Topological insulator: g = 1, t2 = -1, mu_F = 0."""
    return HaldaneModel(1.0, -1.0), 0.0


@pytest.fixture(scope="session")
def metal():
    """Partially filled lower band: g = 1, t2 = 0, mu_F = -2."""
    return HaldaneModel(1.0, 0.0), -2.0


@pytest.fixture(scope="session")
def semimetal():
    """Conical band touching at the Fermi level: g = 0, t2 = 0, mu_F = 0."""
    return HaldaneModel(0.0, 0.0), 0.0
