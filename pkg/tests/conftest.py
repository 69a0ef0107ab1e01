import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ctrwlab import RngStream

settings.register_profile(
    "ctrwlab", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("ctrwlab")

# lines reported by the acceptance suite, echoed once at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def stream():
    return RngStream(20240917, 0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

