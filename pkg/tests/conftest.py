import numpy as np
import pytest

from treeldp import matrix_tree as mt

# filled by test_acceptance; printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def random_essential(rng: np.random.Generator, d: int) -> mt.TransitionMatrix:
    """Random 0-1 matrix with no zero row or column."""
    while True:
        a = (rng.random((d, d)) < 0.6).astype(int)
        if a.sum(axis=0).all() and a.sum(axis=1).all():
            return mt.validate(a.tolist())


@pytest.fixture
def golden():
    return mt.GOLDEN_MEAN


@pytest.fixture
def d2():
    return mt.full_matrix(2)


@pytest.fixture
def d3():
    return mt.full_matrix(3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
