import time

import numpy as np
import pytest

from biaxcann.datagen import generate_fixture, standard_protocols
from biaxcann.discovery import LEFT_ATRIUM, DEFAULT_ALPHAS, RIGHT_ATRIUM, sweep
from biaxcann.training import TrainConfig

# peak stretches of the round-trip fixtures; each keeps every reference term visible
LA_PEAK = 1.32
RA_PEAK = 1.30

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def la_fixture():
    return generate_fixture(LEFT_ATRIUM.weights(), standard_protocols(peak_stretch=LA_PEAK))


@pytest.fixture(scope="session")
def ra_fixture():
    return generate_fixture(RIGHT_ATRIUM.weights(), standard_protocols(peak_stretch=RA_PEAK))


def timed_sweep(data):
    start = time.perf_counter()
    result = sweep(data, TrainConfig(seed=0), DEFAULT_ALPHAS)
    result.elapsed = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def la_sweep(la_fixture):
    return timed_sweep(la_fixture)


@pytest.fixture(scope="session")
def ra_sweep(ra_fixture):
    return timed_sweep(ra_fixture)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
