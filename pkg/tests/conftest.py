
import pytest
from hypothesis import strategies as st

from relayage.model import SystemParams, max_stable_lambda1


@pytest.fixture
def p_ref():
    """The reference instance used throughout: lambda1=0.4, mu1=1, s=w=1."""
    return SystemParams(0.4, 1.0, 1.0, 1.0)


@pytest.fixture
def p_mm1():
    return SystemParams(0.5, 1.0, 0.0, 1.0)


@st.composite
def stable_params(draw, min_s=0.0):
    mu1 = draw(st.floats(0.1, 10.0))
    w = draw(st.floats(0.05, 20.0))
    s = draw(st.floats(min_s, 20.0))
    frac = draw(st.floats(0.02, 0.98))
    lam = frac * max_stable_lambda1(mu1, s, w)
    return SystemParams(lam, mu1, s, w)


def rel(a, b):
    return abs(a - b) / abs(b)


_criteria_lines = []


def record_criterion(line: str) -> None:
    _criteria_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _criteria_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criteria_lines:
            terminalreporter.write_line(line)
