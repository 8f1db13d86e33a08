"""Class graphs weighted by pairwise BER and recursive min-cut hierarchies."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class ClassGraph:
    """Complete graph over class ids; ``weights[i, j]`` pairs ``vertices[i]``, ``vertices[j]``."""

    vertices: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        k = len(self.vertices)
        if W.shape != (k, k):
            raise ValueError("weight matrix shape does not match vertex count")
        off = ~np.eye(k, dtype=bool)
        if np.any(~np.isfinite(W[off])) or np.any(W[off] < 0):
            raise ValueError("every pair needs a finite nonnegative weight")
        if not np.array_equal(W, W.T):
            raise ValueError("weights must be symmetric")
        np.fill_diagonal(W, 0.0)
        W.setflags(write=False)
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        object.__setattr__(self, "weights", W)

    def subgraph(self, keep: Sequence[int]) -> "ClassGraph":
        pos = [self.vertices.index(v) for v in sorted(keep)]
        return ClassGraph(tuple(sorted(keep)), self.weights[np.ix_(pos, pos)])

    def weight(self, a: int, b: int) -> float:
        return float(self.weights[self.vertices.index(a), self.vertices.index(b)])


def build_class_graph(estimates) -> ClassGraph:
    """Graph whose edge weights are the normalized, bias-corrected estimates.

    ``estimates`` is the nested K x K output of ``pairwise_ber_matrix``.
    """
    K = len(estimates)
    W = np.zeros((K, K))
    for i in range(K):
        for j in range(K):
            if i == j:
                continue
            e = estimates[i][j]
            if e is None:
                raise ValueError(f"missing estimate for class pair ({i + 1}, {j + 1})")
            W[i, j] = e.p_hat_normalized
    if not np.array_equal(W, W.T):
        raise ValueError("estimate matrix is not symmetric")
    return ClassGraph(tuple(range(1, K + 1)), W)


def min_cut(graph: ClassGraph) -> tuple[frozenset, frozenset, float]:
    """Global minimum cut by Stoer-Wagner.

    Vertices are processed in ascending id order and ties in the maximum
    adjacency search go to the smallest id, so the first minimum found is
    returned. ``V0`` is the side holding the smallest vertex id.
    """
    verts = list(graph.vertices)
    if len(verts) < 2:
        raise ValueError("min cut needs at least 2 vertices")
    order = np.argsort(verts, kind="stable")
    W = graph.weights[np.ix_(order, order)].copy()
    ids = [verts[i] for i in order]
    groups = [[v] for v in ids]
    active = list(range(len(ids)))
    best_w = np.inf
    best_side: list[int] = []

    while len(active) > 1:
        added = [active[0]]
        conn = W[active[0]].copy()
        remaining = active[1:]
        while remaining:
            # first position of the max: remaining stays sorted by id
            j = max(remaining, key=lambda v: (conn[v], -v))
            remaining.remove(j)
            added.append(j)
            if remaining:
                conn += W[j]
        s, t = added[-2], added[-1]
        cut_w = float(W[t, active].sum())
        if cut_w < best_w:
            best_w = cut_w
            best_side = list(groups[t])
        W[s] += W[t]
        W[:, s] += W[:, t]
        W[s, s] = 0.0
        groups[s].extend(groups[t])
        active.remove(t)

    side = frozenset(best_side)
    other = frozenset(ids) - side
    if min(ids) in side:
        return side, other, best_w
    return other, side, best_w


def cut_weight(graph: ClassGraph, side) -> float:
    side = set(side)
    mask = np.array([v in side for v in graph.vertices])
    return float(graph.weights[np.ix_(mask, ~mask)].sum())


@dataclass
class TreeNode:
    """Leaf when ``classes`` has one id; otherwise a split into two children."""

    classes: tuple[int, ...]
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def internal_nodes(self) -> Iterator["TreeNode"]:
        """Internal nodes in preorder."""
        if self.is_leaf:
            return
        yield self
        yield from self.left.internal_nodes()
        yield from self.right.internal_nodes()

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.classes[0]]
        return self.left.leaves() + self.right.leaves()

    def to_json(self, names: Sequence[str] | None = None) -> dict:
        def name(c):
            return names[c - 1] if names is not None else c

        if self.is_leaf:
            return {"leaf": name(self.classes[0])}
        return {
            "left": [name(c) for c in self.left.classes],
            "right": [name(c) for c in self.right.classes],
            "weight": self.weight,
            "children": [self.left.to_json(names), self.right.to_json(names)],
        }

    @classmethod
    def from_json(cls, doc: dict, ids: dict | None = None) -> "TreeNode":
        def cid(x):
            return ids[x] if ids is not None else int(x)

        if "leaf" in doc:
            return cls((cid(doc["leaf"]),))
        left = cls.from_json(doc["children"][0], ids)
        right = cls.from_json(doc["children"][1], ids)
        return cls(tuple(sorted(left.classes + right.classes)), left, right, float(doc["weight"]))

    def render(self, names: Sequence[str] | None = None, indent: int = 0) -> str:
        def fmt(cs):
            return "{" + ", ".join(str(names[c - 1] if names else c) for c in cs) + "}"

        pad = "  " * indent
        if self.is_leaf:
            return f"{pad}{fmt(self.classes)}"
        lines = [f"{pad}{fmt(self.left.classes)} | {fmt(self.right.classes)}  (cut {self.weight:.4g})",
                 self.left.render(names, indent + 1),
                 self.right.render(names, indent + 1)]
        return "\n".join(lines)

    def canonical(self):
        """Order-free form for comparing trees up to child order."""
        if self.is_leaf:
            return self.classes[0]
        return frozenset([self.left.canonical(), self.right.canonical()])


def build_hierarchy(graph: ClassGraph) -> TreeNode:
    """Recursively min-cut ``graph``; edge weights stay fixed throughout."""
    if len(graph.vertices) == 1:
        return TreeNode(graph.vertices)
    v0, v1, w = min_cut(graph)
    return TreeNode(
        tuple(sorted(graph.vertices)),
        build_hierarchy(graph.subgraph(v0)),
        build_hierarchy(graph.subgraph(v1)),
        w,
    )
