import random

import pytest

from core.model import Edge, EdgeWeights
from tests.instances import C6, EX1, LAT3, NOSM, TWO_C6


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def ex1():
    return EX1


@pytest.fixture
def c6():
    return C6


@pytest.fixture
def lat3():
    return LAT3


@pytest.fixture
def nosm():
    return NOSM


@pytest.fixture
def two_c6():
    return TWO_C6


@pytest.fixture
def c6_weights():
    return EdgeWeights.for_instance(C6, {(1, 2): 5, (2, 3): 1, (3, 4): 1, (4, 5): 1, (5, 6): 1, (1, 6): 1})


@pytest.fixture
def two_c6_weights():
    weights = {e: 1 for e in TWO_C6.edges}
    weights[Edge(1, 2)] = 2
    weights[Edge(7, 8)] = 2
    return EdgeWeights.for_instance(TWO_C6, weights)
