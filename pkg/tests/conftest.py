import math

import pytest

from nsft import bundled_spec
from nsft.bundled import CORE_SPECS

PHI = (1 + math.sqrt(5)) / 2
LOG_PHI = math.log(PHI)
A = [[1, 1, 1], [1, 1, 1], [1, 1, 1]]
B = [[1, 1, 0], [1, 1, 0], [0, 0, 1]]
G = [[1, 1], [1, 0]]


def fib(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@pytest.fixture(scope="session")
def golden():
    return bundled_spec("golden-mean")


@pytest.fixture(scope="session")
def full3():
    return bundled_spec("full3")


@pytest.fixture(scope="session")
def ab_linear():
    return bundled_spec("ab-linear")


@pytest.fixture(scope="session")
def permutation():
    return bundled_spec("permutation")


@pytest.fixture(scope="session")
def mixed():
    return bundled_spec("mixed23")


@pytest.fixture(scope="session", params=CORE_SPECS)
def any_spec(request):
    return bundled_spec(request.param)
