import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from riplan.checks import random_pd


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pd_matrices(d: int, lo: float = 0.05, hi: float = 5.0):
    """Hypothesis strategy: seeded random PD matrices of size d."""
    return st.integers(0, 2 ** 32 - 1).map(lambda s: random_pd(np.random.default_rng(s), d, lo, hi))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
