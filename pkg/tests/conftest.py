import functools

import pytest

from hedgehog.model import derive_model_params
from hedgehog.profile import solve_finite_ball, solve_semi_infinite


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def semi_infinite(t: float, r_max: float = 50.0):
    m = derive_model_params(t)
    return m, solve_semi_infinite(m, r_max)


@functools.lru_cache(maxsize=None)
def ball(t: float, R: float):
    m = derive_model_params(t)
    return m, solve_finite_ball(m, R)


@pytest.fixture(scope="session")
def hedgehog200():
    return semi_infinite(200.0)
