import itertools
from functools import lru_cache

import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def all_spanning_trees(n: int) -> np.ndarray:
    """Every labeled tree on n nodes as an (n**(n-2), n-1, 2) edge array.

    Built by decoding all Pruefer sequences, vectorized across sequences.
    """
    if n == 2:
        return np.array([[[0, 1]]])
    seqs = np.array(list(itertools.product(range(n), repeat=n - 2)), dtype=np.int64)
    N = seqs.shape[0]
    degree = np.ones((N, n), dtype=np.int64)
    rows = np.arange(N)
    for col in range(n - 2):
        np.add.at(degree, (rows, seqs[:, col]), 1)
    edges = np.empty((N, n - 1, 2), dtype=np.int64)
    for col in range(n - 2):
        leaf = np.argmax(degree == 1, axis=1)
        other = seqs[:, col]
        edges[:, col, 0] = np.minimum(leaf, other)
        edges[:, col, 1] = np.maximum(leaf, other)
        degree[rows, leaf] -= 1
        degree[rows, other] -= 1
    last = np.argsort(degree != 1, axis=1, kind="stable")[:, :2]
    edges[:, n - 2, 0] = last.min(axis=1)
    edges[:, n - 2, 1] = last.max(axis=1)
    return edges


def brute_force_mst_weight(dist: np.ndarray) -> float:
    trees = all_spanning_trees(dist.shape[0])
    return float(dist[trees[..., 0], trees[..., 1]].sum(axis=1).min())


def brute_force_min_cut(W: np.ndarray) -> float:
    """Minimum over all 2**(k-1) - 1 bipartitions (vertex 0 fixed on one side)."""
    k = W.shape[0]
    best = np.inf
    for mask in range(1, 2 ** (k - 1)):
        side = np.array([False] + [(mask >> i) & 1 == 1 for i in range(k - 1)])
        best = min(best, W[np.ix_(side, ~side)].sum())
    return float(best)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
