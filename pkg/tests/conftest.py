import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from drboost.objectives import QuadraticObjective

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def fixture_qp():
    """f(x) = -x'x/2 + 1'x on [0, 1]^2, noise 1."""
    return QuadraticObjective(-np.eye(2), noise_delta=1.0)


@pytest.fixture
def fixture_qp_exact():
    return QuadraticObjective(-np.eye(2), noise_delta=0.0)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
