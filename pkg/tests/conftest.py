import numpy as np
import pytest

from adhocnet import LinkGraph, build_min_degree_network, generate_layout
from adhocnet.geomnet import is_routable


def random_small_graphs(count, seed, n_max=10):
    """Routable graphs with N <= n_max: half geometric, half random with one-way links."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(3, n_max + 1))
        if len(out) % 2 == 0:
            k = int(rng.integers(1, min(3, n - 1) + 1))
            g = build_min_degree_network(generate_layout(n, int(rng.integers(1 << 31))), k_min=k)
        else:
            adj = rng.random((n, n)) < rng.uniform(0.25, 0.6)
            g = LinkGraph(adj)
        if is_routable(g):
            out.append(g)
    return out


@pytest.fixture(scope="session")
def small_graphs():
    return random_small_graphs(60, seed=7)


@pytest.fixture(scope="session")
def net300():
    return build_min_degree_network(generate_layout(300, 11), k_min=8)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
