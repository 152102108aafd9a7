import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("waylab", max_examples=40, deadline=None, derandomize=True)
settings.load_profile("waylab")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import LINES
    except ImportError:
        return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
