import numpy as np
import pytest

from ictk.capacity import SingleUserChannel


def random_cond(rng, rows, cols, sparsity=0.0):
    w = rng.dirichlet(np.ones(cols), size=rows)
    if sparsity:
        w = np.where(rng.random(w.shape) < sparsity, 0.0, w)
        w[w.sum(1) == 0, 0] = 1.0
        w /= w.sum(1, keepdims=True)
    return w


def bsc(p):
    return np.array([[1 - p, p], [p, 1 - p]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def bsc_channel():
    return SingleUserChannel(bsc(0.11), bsc(0.11))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
