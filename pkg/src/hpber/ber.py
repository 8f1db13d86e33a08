"""Bias-corrected Henze-Penrose estimates of the Bayes error rate.

The pipeline turns a Friedman-Rafsky cross count ``R`` into
``u = 1 - 2R/n``, brackets the BER with ``1/2 - sqrt(u)/2`` and
``1/2 - u/2``, and reports the midpoint. Before that, ``R`` is capped at the
value ``gamma`` where the midpoint equals the smaller empirical prior, since
no binary problem can have a BER above it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from itertools import combinations

import numpy as np

from .dataset import DataError, LabeledDataset
from .mst import orthogonal_msts, ovr_cross_counts, pairwise_distances


@dataclass(frozen=True)
class BerEstimate:
    r_raw: float
    r_corrected: float
    u_hp: float
    p_lower: float
    p_upper: float
    p_hat: float
    p_hat_normalized: float
    n1: int
    n2: int

    def to_dict(self) -> dict:
        return asdict(self)


def hp_divergence(r: float, n1: int, n2: int) -> float:
    """Cross-count estimate of the HP divergence, clamped at zero."""
    n = n1 + n2
    return max(0.0, 1.0 - n * r / (2.0 * n1 * n2))


def gamma_threshold(n: int, n1: int, n2: int) -> float:
    m = min(n1, n2) / n
    return 2.0 * n * m - 0.75 * n + 0.25 * n * math.sqrt(9.0 - 16.0 * m)


def bias_corrected_r(r: float, n: int, n1: int, n2: int) -> float:
    return min(gamma_threshold(n, n1, n2), r)


def estimate_from_r(r_corrected: float, n1: int, n2: int, r_raw: float | None = None) -> BerEstimate:
    n = n1 + n2
    u = min(max(1.0 - 2.0 * r_corrected / n, 0.0), 1.0)
    su = math.sqrt(u)
    p_lower = 0.5 - 0.5 * su
    p_upper = 0.5 - 0.5 * u
    p_hat = 0.5 - 0.25 * su - 0.25 * u
    m = min(n1, n2) / n
    return BerEstimate(
        r_raw=float(r_corrected if r_raw is None else r_raw),
        r_corrected=float(r_corrected),
        u_hp=u,
        p_lower=p_lower,
        p_upper=p_upper,
        p_hat=p_hat,
        p_hat_normalized=min(max(p_hat / m, 0.0), 1.0),
        n1=int(n1),
        n2=int(n2),
    )


def estimate_from_counts(counts, n1: int, n2: int) -> BerEstimate:
    """Average raw cross counts over trees, then cap once and estimate."""
    r = float(np.mean(counts))
    n = n1 + n2
    return estimate_from_r(bias_corrected_r(r, n, n1, n2), n1, n2, r_raw=r)


def binary_ber(X, membership, n_trees: int = 3) -> BerEstimate:
    """HP estimate for a two-group sample given as features + boolean mask."""
    m = np.asarray(membership, dtype=bool)
    n1 = int(m.sum())
    n2 = m.size - n1
    if n1 == 0 or n2 == 0:
        raise ValueError("both groups must be present")
    trees = orthogonal_msts(pairwise_distances(X), n_trees)
    counts = [np.count_nonzero(m[t.edges[:, 0]] != m[t.edges[:, 1]]) for t in trees]
    return estimate_from_counts(counts, n1, n2)


def _check_class(ds: LabeledDataset, k: int) -> None:
    if not 1 <= k <= ds.n_classes:
        raise DataError(f"class id {k} absent from dataset")
    if ds.counts[k - 1] < 2:
        raise DataError(f"class {ds.name_of(k)!r} has fewer than 2 samples")


def pairwise_ber(ds: LabeledDataset, class_a: int, class_b: int, n_trees: int = 3,
                 seed: int = 0) -> BerEstimate:
    """Estimate the BER between two classes of ``ds``.

    ``seed`` is accepted for interface stability; tie-breaking in the MST is
    already deterministic, so the result does not depend on it.
    """
    if class_a == class_b:
        raise ValueError("class_a and class_b must differ")
    _check_class(ds, class_a)
    _check_class(ds, class_b)
    rows = (ds.labels == class_a) | (ds.labels == class_b)
    return binary_ber(ds.features[rows], ds.labels[rows] == class_a, n_trees)


def pairwise_ber_matrix(ds: LabeledDataset, n_trees: int = 3, seed: int = 0,
                        workers: int = 1) -> list[list[BerEstimate | None]]:
    """K x K nested list; entry [k-1][l-1] is the estimate for classes k, l."""
    for k in ds.class_ids:
        _check_class(ds, int(k))
    K = ds.n_classes
    pairs = list(combinations(range(1, K + 1), 2))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda p: pairwise_ber(ds, p[0], p[1], n_trees, seed), pairs))
    else:
        results = [pairwise_ber(ds, a, b, n_trees, seed) for a, b in pairs]
    out: list[list[BerEstimate | None]] = [[None] * K for _ in range(K)]
    for (a, b), est in zip(pairs, results):
        out[a - 1][b - 1] = est
        out[b - 1][a - 1] = est
    return out


def ovr_ber_estimates(ds: LabeledDataset, n_trees: int = 3, seed: int = 0) -> list[BerEstimate]:
    """One-vs-rest estimates for every class from one set of trees on all of ``ds``."""
    trees = orthogonal_msts(pairwise_distances(ds.features), n_trees)
    per_tree = np.array([ovr_cross_counts(t, ds.labels, ds.n_classes) for t in trees])
    n = ds.n
    return [estimate_from_counts(per_tree[:, k], int(n_k), int(n - n_k))
            for k, n_k in enumerate(ds.counts)]


def normalized_matrix(estimates) -> np.ndarray:
    """Normalized point estimates as a float array with NaN on the diagonal."""
    K = len(estimates)
    M = np.full((K, K), np.nan)
    for i in range(K):
        for j in range(K):
            if estimates[i][j] is not None:
                M[i, j] = estimates[i][j].p_hat_normalized
    return M


def estimates_to_json(ds: LabeledDataset, pairwise=None, ovr=None, n_trees: int = 3) -> dict:
    doc = {"classes": list(ds.label_names)}
    if pairwise is not None:
        doc["pairwise"] = [[None if e is None else e.to_dict() for e in row] for row in pairwise]
    if ovr is not None:
        doc["ovr"] = [e.to_dict() for e in ovr]
    doc["n_trees"] = n_trees
    return doc
