from pathlib import Path

import numpy as np
import pytest

from cascadeids.core import Dataset

DATA = Path(__file__).parent / "data"


@pytest.fixture
def conn_log_path():
    return DATA / "conn_200.log"


def blobs(n0, n1, d=2, gap=4.0, seed=0):
    """Two well-separated Gaussian blobs."""
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0, 0.5, (n0, d)), rng.normal(gap, 0.5, (n1, d))])
    y = np.r_[np.zeros(n0, int), np.ones(n1, int)]
    return Dataset(X, y, tuple(f"x{j}" for j in range(d)))


@pytest.fixture
def separable():
    return blobs(40, 20)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
