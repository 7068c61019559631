import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mcfselect import MCFInstance

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_t1():
    return MCFInstance.from_arcs(2, [(0, 1, 3, 10)], [5, -5])


def make_t2():
    return MCFInstance.from_arcs(3, [(0, 1, 1, 4), (0, 2, 5, 10), (1, 2, 1, 4)], [5, 0, -5])


def make_t3():
    return MCFInstance.from_arcs(2, [(0, 1, 3, 3)], [5, -5])


@pytest.fixture
def t1():
    return make_t1()


@pytest.fixture
def t2():
    return make_t2()


@pytest.fixture
def t3():
    return make_t3()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
