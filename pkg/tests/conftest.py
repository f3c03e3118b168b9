import pytest

from qcmoments.inequalities import enumerate_catalog


@pytest.fixture(scope="session")
def catalog5():
    return enumerate_catalog(5)


@pytest.fixture(scope="session")
def catalog3():
    return enumerate_catalog(3)


@pytest.fixture(scope="session")
def classical_catalog3():
    return enumerate_catalog(3, classical=True)
