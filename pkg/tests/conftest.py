import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ardrecon.ard import TraitPartition
from ardrecon.graphgen import Graph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_graph(n, p, rng, weighted=False):
    iu, ju = np.triu_indices(n, 1)
    hit = rng.random(len(iu)) < p
    edges = np.column_stack([iu[hit], ju[hit]])
    w = rng.integers(1, 5, size=len(edges)) if weighted else None
    return Graph(n, edges, weights=w)


def random_traits(n, K, rng, p=0.4):
    return TraitPartition(n, [np.flatnonzero(rng.random(n) < p) for _ in range(K)])


def path_graph(n):
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(n):
    return Graph(n, [(0, i) for i in range(1, n)])


def complete_graph(n):
    return Graph(n, list(zip(*np.triu_indices(n, 1))))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
