import numpy as np
import pytest

from gravelet.graph import build_graph


def random_connected(seed: int, n_max: int = 100):
    """Random tree plus extra edges; connected by construction."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, n_max + 1))
    edges = {(int(rng.integers(i)), i) for i in range(1, n)}
    for _ in range(int(rng.integers(0, 2 * n))):
        u, v = (int(x) for x in rng.choice(n, 2, replace=False))
        edges.add((min(u, v), max(u, v)))
    return build_graph(sorted(edges), nodes=range(n))


@pytest.fixture(scope="session")
def corpus():
    return [random_connected(1000 + i) for i in range(50)]


def cycle(n):
    return build_graph([(i, (i + 1) % n) for i in range(n)])


def path(n):
    return build_graph([(i, i + 1) for i in range(n - 1)])


# acceptance lines, echoed again at the end of the run so they survive capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
