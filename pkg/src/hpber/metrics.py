"""Per-class confusion rate and the adjusted Rand index."""

from __future__ import annotations

import numpy as np
from scipy.special import comb


def _pair(y, y_hat):
    y, y_hat = np.asarray(y), np.asarray(y_hat)
    if y.shape != y_hat.shape or y.ndim != 1:
        raise ValueError("label vectors must have equal length")
    return y, y_hat


def confusion_rate(y, y_hat, k) -> float:
    """Fraction of samples wrongly assigned to, or wrongly withheld from, class k."""
    y, y_hat = _pair(y, y_hat)
    false_in = np.count_nonzero((y_hat == k) & (y != k))
    false_out = np.count_nonzero((y_hat != k) & (y == k))
    return (false_in + false_out) / y.size


def adjusted_rand_index(y, y_hat) -> float:
    """Hubert-Arabie ARI computed from the contingency table."""
    y, y_hat = _pair(y, y_hat)
    n = y.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    _, a = np.unique(y, return_inverse=True)
    _, b = np.unique(y_hat, return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    index = comb(table, 2).sum()
    rows = comb(table.sum(axis=1), 2).sum()
    cols = comb(table.sum(axis=0), 2).sum()
    expected = rows * cols / comb(n, 2)
    top = 0.5 * (rows + cols)
    if top == expected:
        # both partitions trivial (all-one-cluster or all-singletons)
        return 1.0
    return float((index - expected) / (top - expected))
