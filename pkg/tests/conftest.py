#!/usr/bin/env python3
"""
Pytest configuration and fixtures for flatmoduli tests.

Provides tori, groups, twist contexts and seeded generators shared by unit
and integration tests.
"""

import pytest
import tempfile
import shutil
from pathlib import Path
import sys

import numpy as np

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from config import ConfigLoader
from derham import make_twist, trivial_twist
from lie import build_group
from logging_config import AppLogger
from torus import make_torus

SQUARE = [1.0, 1j]
SHEARED = [1.0, 0.5 + 1j]
PRODUCT = [[1.0, 1j, 0.0, 0.0], [0.0, 0.0, 1.0, 1j]]
# χ = diag(0, 0, c) dz̄: a nontrivial twist of T₃ without windings.
T3_CHI = [[0.0, 0.0, 0.3 + 0.1j]]


@pytest.fixture(scope="session", autouse=True)
def setup_logging():
    """Set up logging for all tests."""
    log_file = AppLogger.setup_logging(
        console_level="WARNING",  # Keep console quiet during tests
        enable_file_logging=True
    )
    yield log_file


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files."""
    temp_path = tempfile.mkdtemp(prefix="flatmoduli_test_")
    yield Path(temp_path)
    shutil.rmtree(temp_path, ignore_errors=True)


@pytest.fixture
def rng():
    """Seeded generator; every test starts from the same state."""
    return np.random.default_rng(20240607)


@pytest.fixture(scope="session")
def square():
    """Elliptic curve ℂ/(ℤ + iℤ), cutoff 8."""
    return make_torus(1, SQUARE, 8)


@pytest.fixture(scope="session")
def sheared():
    """Elliptic curve ℂ/(ℤ + (1/2 + i)ℤ), cutoff 8."""
    return make_torus(1, SHEARED, 8)


@pytest.fixture(scope="session")
def small_square():
    """Square curve with a short band for cheap spectral tests."""
    return make_torus(1, SQUARE, 4)


@pytest.fixture(scope="session")
def product_torus():
    """Product of two square curves, g = 2, cutoff 4."""
    return make_torus(2, PRODUCT, 4)


@pytest.fixture(scope="session")
def t2():
    return build_group("Triangular", 2)


@pytest.fixture(scope="session")
def t3():
    return build_group("Triangular", 3)


@pytest.fixture(scope="session")
def borel_sp4():
    return build_group("BorelSp", 4)


@pytest.fixture(scope="session")
def borel_so5():
    return build_group("BorelSO", 5)


@pytest.fixture
def trivial_ctx_t2(square, t2):
    return trivial_twist(square, t2)


@pytest.fixture
def twisted_ctx_t3(square, t3):
    return make_twist(T3_CHI, square, t3)


@pytest.fixture
def config_loader():
    """Provide ConfigLoader instance."""
    return ConfigLoader()


@pytest.fixture
def minimal_config_text():
    """Smallest valid job: T₂ over the square curve."""
    return """\
command: verify-identities
torus:
  g: 1
  period_matrix: [1, "1j"]
group:
  family: Triangular
  rank: 2
"""
