import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spiked_wigner.prior import Prior

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rademacher():
    return Prior.rademacher()


@pytest.fixture
def asym():
    # centered, unit variance, not symmetric
    return Prior.centered_two_point(0.3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
