import numpy as np
import pytest

from trapdyn import model, systems


@pytest.fixture(scope="session")
def two():
    return systems.two_state()


@pytest.fixture(scope="session")
def lor():
    return systems.lorenz()


@pytest.fixture(scope="session")
def lor_sf(lor):
    return model.shift(lor, [0.0, 0.0, 38.0])


@pytest.fixture(scope="session")
def two_sf(two):
    return model.shift(two, [0.0, 0.0])


def brute_defect(Q):
    """Lossless identity residual by explicit triple loop."""
    n = Q.shape[0]
    worst = 0.0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                worst = max(worst, abs(Q[i, j, k] + Q[j, i, k] + Q[k, i, j]))
    return worst


def unit_vectors(rng, count, n):
    u = rng.standard_normal((count, n))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
