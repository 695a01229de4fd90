import pytest

from vptstream import machines


@pytest.fixture(scope="session")
def fig2_t1():
    return machines.load("fig2_t1")


@pytest.fixture(scope="session")
def fig3_plain():
    return machines.load("fig3_plain")


@pytest.fixture(scope="session")
def fig3_full():
    return machines.load("fig3_full")


@pytest.fixture(scope="session")
def fig4():
    return machines.load("fig4")
