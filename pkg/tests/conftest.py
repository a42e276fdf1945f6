import math

import pytest
from hypothesis import HealthCheck, settings

from biharm_pml.modal import ProblemConfig
from biharm_pml.pml import PmlProfile

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def cfg():
    return ProblemConfig()


@pytest.fixture
def profile():
    return PmlProfile()


@pytest.fixture
def normal_cfg():
    """Normal incidence: alpha_1 = kappa, so mode 1 is resonant."""
    return ProblemConfig(theta=0.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


TWO_PI = 2 * math.pi


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
