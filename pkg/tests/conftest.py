import numpy as np
import pytest

from tidemix import FunctionSpacePair, build_unit_square


@pytest.fixture(scope="session")
def mesh1():
    return build_unit_square(1)


@pytest.fixture(scope="session")
def mesh2():
    return build_unit_square(2)


@pytest.fixture(scope="session")
def mesh4():
    return build_unit_square(4)


@pytest.fixture(scope="session", params=[1, 2], ids=["order1", "order2"])
def order(request):
    return request.param


@pytest.fixture(scope="session")
def space2(mesh2, order):
    return FunctionSpacePair(mesh2, order)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
