from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from informativity import load_problem

DATA = Path(__file__).parent / "data"

settings.register_profile("default", max_examples=60, deadline=None, derandomize=True,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def fixture_path(name: str) -> Path:
    return DATA / f"{name}.json"


@pytest.fixture
def example3():
    sys, data, _ = load_problem(fixture_path("example3"))
    return sys, data


@pytest.fixture
def sec5():
    sys, data, _ = load_problem(fixture_path("sec5"))
    return sys, data


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# filled by test_acceptance.py, one line per criterion
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
