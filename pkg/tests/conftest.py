import numpy as np
import pytest

from app.core.config import settings
from app.models.system import GenSpec, LinearSystem
from app.services.datagen import gen_gaussian_system, generate_instance


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def consistent_system() -> LinearSystem:
    """Consistent 50 x 10 Gaussian system with known x*"""
    return gen_gaussian_system(50, 10, seed=3)


@pytest.fixture
def identity_system() -> LinearSystem:
    b = np.arange(1.0, 7.0)
    return LinearSystem(A=np.eye(6), b=b, x_star=b.copy(), e=np.zeros(6))


@pytest.fixture(scope="session")
def clustered_instance():
    """(system, labels) of a consistent 400 x 40 instance with four clusters"""
    return generate_instance(GenSpec(n=400, p=40, k=4, spread=0.1, seed=11))


@pytest.fixture(autouse=True)
def deterministic_wall_time():
    """Keep traces free of wall-clock time whatever a test toggles"""
    previous = settings.RECORD_WALL_TIME
    settings.RECORD_WALL_TIME = False
    yield
    settings.RECORD_WALL_TIME = previous
