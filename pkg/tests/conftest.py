import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sgproof.core import Shape
from sgproof.instances import enumerate_sigma


@pytest.fixture(scope="session")
def shape32():
    return Shape(3, 2)


@pytest.fixture(scope="session")
def shape22():
    return Shape(2, 2)


@pytest.fixture(scope="session")
def instances32(shape32):
    return enumerate_sigma(shape32)


@pytest.fixture(scope="session")
def instances22(shape22):
    return enumerate_sigma(shape22)
