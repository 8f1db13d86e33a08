"""Euclidean minimal spanning trees and Friedman-Rafsky cross counts.

Trees are built with Prim's algorithm on a dense distance matrix. Candidate
edges are ordered by ``(weight, min endpoint, max endpoint)``; that order is
strict, so the tree returned is the unique minimum under it and does not
depend on the row order of equal-weight candidates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

import numba
import numpy as np
from scipy.spatial.distance import pdist, squareform


class DisconnectedGraphError(ValueError):
    pass


class OrthogonalMSTWarning(UserWarning):
    """Fewer orthogonal trees than requested could be built."""


@dataclass(frozen=True)
class SpanningTree:
    n: int
    edges: np.ndarray  # (n - 1, 2) int64, each row (i, j) with i < j

    def weight(self, dist: np.ndarray) -> float:
        return float(dist[self.edges[:, 0], self.edges[:, 1]].sum())

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}


def pairwise_distances(features) -> np.ndarray:
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("need at least 2 points")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite feature values")
    # pdist evaluates each unordered pair once, so the result is exactly symmetric
    return squareform(pdist(X, "euclidean"))


@numba.njit(cache=True, nogil=True)
def _prim(dist):
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=np.bool_)
    key = np.empty(n)
    parent = np.zeros(n, dtype=np.int64)
    edges = np.empty((n - 1, 2), dtype=np.int64)
    in_tree[0] = True
    for v in range(1, n):
        key[v] = dist[0, v]
    key[0] = np.inf
    for step in range(n - 1):
        best = -1
        bw = np.inf
        blo = 0
        bhi = 0
        for v in range(n):
            if in_tree[v]:
                continue
            w = key[v]
            p = parent[v]
            lo = min(p, v)
            hi = max(p, v)
            if best == -1 or w < bw or (w == bw and (lo < blo or (lo == blo and hi < bhi))):
                best = v
                bw = w
                blo = lo
                bhi = hi
        if bw == np.inf:
            return edges[:step], False
        in_tree[best] = True
        edges[step, 0] = blo
        edges[step, 1] = bhi
        for v in range(n):
            if in_tree[v]:
                continue
            w = dist[best, v]
            if w > key[v]:
                continue
            if w < key[v]:
                key[v] = w
                parent[v] = best
                continue
            # equal weight: keep the lexicographically smaller endpoint pair
            p = parent[v]
            if (min(best, v), max(best, v)) < (min(p, v), max(p, v)):
                parent[v] = best
    return edges, True


def _check_dist(dist) -> np.ndarray:
    D = np.asarray(dist, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1] or D.shape[0] < 2:
        raise ValueError("distance matrix must be square with n >= 2")
    return D


def mst(dist, excluded: Iterable[tuple[int, int]] = ()) -> SpanningTree:
    """Exact minimum spanning tree of the complete graph minus ``excluded``."""
    D = _check_dist(dist)
    excluded = list(excluded)
    if excluded:
        D = D.copy()
        ex = np.asarray(excluded, dtype=np.int64).reshape(-1, 2)
        D[ex[:, 0], ex[:, 1]] = np.inf
        D[ex[:, 1], ex[:, 0]] = np.inf
    edges, ok = _prim(np.ascontiguousarray(D))
    if not ok:
        raise DisconnectedGraphError("admissible edge set does not span all points")
    return SpanningTree(D.shape[0], edges)


def orthogonal_msts(dist, count: int = 3) -> list[SpanningTree]:
    """Sequence of edge-disjoint MSTs, each built after removing earlier ones.

    If the graph disconnects before ``count`` trees exist, the trees built so
    far are returned and an :class:`OrthogonalMSTWarning` is issued.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    D = _check_dist(dist).copy()
    trees = []
    for _ in range(count):
        edges, ok = _prim(D)
        if not ok:
            warnings.warn(f"only {len(trees)} of {count} orthogonal MSTs exist",
                          OrthogonalMSTWarning, stacklevel=2)
            break
        trees.append(SpanningTree(D.shape[0], edges))
        D[edges[:, 0], edges[:, 1]] = np.inf
        D[edges[:, 1], edges[:, 0]] = np.inf
    return trees


def cross_count(tree: SpanningTree, membership) -> int:
    """Number of tree edges joining the two membership groups."""
    m = np.asarray(membership, dtype=bool)
    if m.shape != (tree.n,):
        raise ValueError("membership length must equal the number of nodes")
    if m.all() or not m.any():
        raise ValueError("membership must contain both groups")
    return int(np.count_nonzero(m[tree.edges[:, 0]] != m[tree.edges[:, 1]]))


def ovr_cross_counts(tree: SpanningTree, labels, n_classes: int | None = None) -> np.ndarray:
    """Per-class count of edges with exactly one endpoint in that class.

    Entry ``k - 1`` belongs to class id ``k``.
    """
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (tree.n,):
        raise ValueError("labels length must equal the number of nodes")
    K = int(y.max()) if n_classes is None else n_classes
    a = y[tree.edges[:, 0]]
    b = y[tree.edges[:, 1]]
    crossing = a != b
    counts = np.bincount(a[crossing], minlength=K + 1) + np.bincount(b[crossing], minlength=K + 1)
    return counts[1:K + 1]
