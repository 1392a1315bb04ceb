import numpy as np
import pytest

from gselab.arrays import InteractionArray, RArray

FIXTURES = __import__("pathlib").Path(__file__).parent / "fixtures"


def random_instance(gen, k, q, r, zero_diag=False):
    g = gen.uniform(-1, 1, (k,) * r)
    if zero_diag:
        from gselab.arrays import repeated_index_mask

        g[repeated_index_mask(k, r)] = 0.0
    return RArray(g), InteractionArray(gen.uniform(-1, 1, (q,) * r))


def random_partition(gen, k, q):
    w = gen.random((k, q)) + 1e-3
    return w / w.sum(axis=1, keepdims=True)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


@pytest.fixture
def fixtures():
    return FIXTURES


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
