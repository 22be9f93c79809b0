import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rcexact.channel import Channel, bsc  # noqa: E402

BAC_W = [[0.8, 0.2], [0.3, 0.7]]
#: the binary asymmetric channel used for the convergence sweeps
BAC_SWEEP_W = [[0.95, 0.05], [0.15, 0.85]]
BEC_W = [[0.8, 0.2, 0.0], [0.0, 0.3, 0.7]]
BEC_PX = [0.4, 0.6]
TERNARY_W = [[0.7, 0.2, 0.1], [0.1, 0.7, 0.2], [0.2, 0.1, 0.7]]


@pytest.fixture
def bsc25():
    return bsc(0.25)


@pytest.fixture
def bac():
    return Channel.from_arrays(BAC_W, [0.5, 0.5], name="BAC")


@pytest.fixture
def bec():
    return Channel.from_arrays(BEC_W, BEC_PX, name="asymmetric BEC")


@pytest.fixture
def ternary():
    return Channel.from_arrays(TERNARY_W, [1 / 3] * 3, name="ternary symmetric")


def random_channel(rng: np.random.Generator, nx: int | None = None, ny: int | None = None) -> Channel:
    """A dense random channel with a random, strictly positive input law."""
    nx = nx or int(rng.integers(2, 4))
    ny = ny or int(rng.integers(2, 4))
    W = rng.dirichlet(np.ones(ny), size=nx)
    W = 0.9 * W + 0.1 / ny  # keep away from the singular corner
    Px = rng.dirichlet(np.ones(nx)) * 0.8 + 0.2 / nx
    return Channel.from_arrays(W, Px, name="random")


_CRITERIA_KEY = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the terminal summary prints them in order."""
    table = request.config.stash.setdefault(_CRITERIA_KEY, {})

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        table[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    table = config.stash.get(_CRITERIA_KEY, {})
    if table:
        terminalreporter.section("acceptance criteria")
        for number in sorted(table):
            terminalreporter.write_line(table[number])
