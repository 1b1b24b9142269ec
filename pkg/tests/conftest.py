import numpy as np
import pytest

from icc_walk.construction import build, default_dist
from icc_walk.groups import FreeAbelian, Heisenberg, Lamplighter


@pytest.fixture(scope="session")
def dist():
    return default_dist()


@pytest.fixture(scope="session")
def lamp():
    return Lamplighter()


@pytest.fixture(scope="session")
def state8():
    return build("lamplighter", eps=0.05, n_max=8)


@pytest.fixture(scope="session")
def state4():
    return build("lamplighter", eps=0.05, n_max=4)


@pytest.fixture(scope="session")
def deep_state():
    return build("lamplighter", eps=0.05, n_max=8192)


def random_element(group, rng: np.random.Generator, size: int = 6):
    if isinstance(group, Lamplighter):
        lamps = rng.integers(-size, size, size=rng.integers(0, 5))
        return group.element(lamps.tolist(), int(rng.integers(-size, size)))
    if isinstance(group, Heisenberg):
        return group.element(*(int(v) for v in rng.integers(-size, size, 3)))
    return group.element(*(int(v) for v in rng.integers(-size, size, group.d)))


ALL_GROUPS = [Lamplighter(), FreeAbelian(1), FreeAbelian(2), FreeAbelian(3), Heisenberg()]


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
