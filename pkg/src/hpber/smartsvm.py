"""Hierarchical multiclass SVM built on a BER min-cut tree, plus OvO/OvR baselines."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Sequence

import numpy as np

from .ber import normalized_matrix, pairwise_ber_matrix
from .dataset import DataError, LabeledDataset, kfold
from .svm import DESK_C_GRID, LinearModel, predict_margin, select_c, train_binary
from .tree import TreeNode, build_class_graph, build_hierarchy

MODEL_VERSION = "smartsvm-model/1"


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(X.mean(axis=0), scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_json(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, doc: dict | None) -> "Standardizer | None":
        if doc is None:
            return None
        return cls(np.asarray(doc["mean"]), np.asarray(doc["scale"]))


def _check_classes(ds: LabeledDataset, cv_k: int) -> None:
    need = max(2, cv_k)
    small = [ds.name_of(int(c)) for c, n_k in zip(ds.class_ids, ds.counts) if n_k < need]
    if small:
        raise DataError(f"classes {small} have fewer than {need} samples")


def _fit_binary(X, signs, c_grid, cv_k, seed) -> LinearModel:
    c_grid = list(c_grid)
    if len(c_grid) == 1:
        return train_binary(X, signs, c_grid[0], seed=seed)
    sign_ds = LabeledDataset(X, np.where(signs > 0, 1, 2), ("+1", "-1"))
    folds = kfold(sign_ds, cv_k, seed)
    best_c, _ = select_c(X, signs, c_grid, folds, seed=seed)
    return train_binary(X, signs, best_c, seed=seed)


def _preprocess(ds: LabeledDataset, standardize: bool):
    if not standardize:
        return None, ds.features
    scaler = Standardizer.fit(ds.features)
    return scaler, scaler.transform(ds.features)


def _check_dim(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != d:
        raise ValueError(f"expected an (m, {d}) feature matrix, got shape {X.shape}")
    return X


@dataclass
class SmartSvmModel:
    tree: TreeNode
    node_models: dict  # node class tuple -> LinearModel
    label_names: tuple[str, ...]
    n_features: int
    preprocessing: Standardizer | None = None
    timing: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "labels": list(self.label_names),
            "n_features": self.n_features,
            "tree": self.tree.to_json(),
            "node_models": [{"classes": list(node), **m.to_json()}
                            for node, m in self.node_models.items()],
            "preprocessing": None if self.preprocessing is None else self.preprocessing.to_json(),
            "timing": self.timing,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SmartSvmModel":
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        models = {tuple(m["classes"]): LinearModel.from_json(m) for m in doc["node_models"]}
        return cls(TreeNode.from_json(doc["tree"]), models, tuple(doc["labels"]),
                   int(doc["n_features"]), Standardizer.from_json(doc["preprocessing"]),
                   dict(doc.get("timing", {})))


def train(ds: LabeledDataset, n_trees: int = 3, c_grid: Sequence[float] = DESK_C_GRID,
          cv_k: int = 10, seed: int = 42, standardize: bool = False,
          workers: int = 1) -> SmartSvmModel:
    """Estimate pairwise BERs, cut the class graph into a tree, fit one SVM per split."""
    _check_classes(ds, cv_k)
    t0 = time.perf_counter()
    scaler, X = _preprocess(ds, standardize)
    work = ds.with_features(X)
    estimates = pairwise_ber_matrix(work, n_trees, seed, workers=workers)
    tree = build_hierarchy(build_class_graph(estimates))
    t1 = time.perf_counter()

    def fit_node(node: TreeNode) -> LinearModel:
        rows = np.isin(ds.labels, node.classes)
        signs = np.where(np.isin(ds.labels[rows], node.left.classes), 1.0, -1.0)
        return _fit_binary(X[rows], signs, c_grid, cv_k, seed)

    nodes = list(tree.internal_nodes())
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            fitted = list(ex.map(fit_node, nodes))
    else:
        fitted = [fit_node(node) for node in nodes]
    t2 = time.perf_counter()
    return SmartSvmModel(
        tree, {node.classes: m for node, m in zip(nodes, fitted)}, ds.label_names, ds.d, scaler,
        {"preprocess_seconds": t1 - t0, "fit_seconds": t2 - t1, "total_seconds": t2 - t0},
    )


def predict(model: SmartSvmModel, features) -> np.ndarray:
    """Route each row from the root; margin >= 0 goes to the left (V0) child."""
    X = _check_dim(features, model.n_features)
    if model.preprocessing is not None:
        X = model.preprocessing.transform(X)
    out = np.zeros(X.shape[0], dtype=np.int64)

    def route(node: TreeNode, idx: np.ndarray) -> None:
        if idx.size == 0:
            return
        if node.is_leaf:
            out[idx] = node.classes[0]
            return
        go_left = predict_margin(model.node_models[node.classes], X[idx]) >= 0
        route(node.left, idx[go_left])
        route(node.right, idx[~go_left])

    route(model.tree, np.arange(X.shape[0]))
    return out


@dataclass
class MulticlassModel:
    """One-vs-one or one-vs-rest ensemble of binary SVMs."""

    strategy: str
    models: dict  # (a, b) pair for ovo, class id for ovr -> LinearModel
    label_names: tuple[str, ...]
    n_features: int
    preprocessing: Standardizer | None = None
    timing: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "version": f"{self.strategy}-model/1",
            "labels": list(self.label_names),
            "n_features": self.n_features,
            "models": [{"key": list(np.atleast_1d(k).tolist()), **m.to_json()}
                       for k, m in self.models.items()],
            "preprocessing": None if self.preprocessing is None else self.preprocessing.to_json(),
            "timing": self.timing,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MulticlassModel":
        strategy = doc["version"].split("-model/")[0]
        if doc["version"] not in ("ovo-model/1", "ovr-model/1"):
            raise ValueError(f"unsupported model version {doc['version']!r}")
        models = {}
        for m in doc["models"]:
            key = tuple(m["key"]) if strategy == "ovo" else m["key"][0]
            models[key] = LinearModel.from_json(m)
        return cls(strategy, models, tuple(doc["labels"]), int(doc["n_features"]),
                   Standardizer.from_json(doc["preprocessing"]), dict(doc.get("timing", {})))


def _train_ensemble(strategy, ds, tasks, c_grid, cv_k, seed, standardize, workers):
    _check_classes(ds, cv_k)
    t0 = time.perf_counter()
    scaler, X = _preprocess(ds, standardize)

    def fit(task):
        rows, signs = task[1], task[2]
        return _fit_binary(X[rows], signs, c_grid, cv_k, seed)

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            fitted = list(ex.map(fit, tasks))
    else:
        fitted = [fit(t) for t in tasks]
    elapsed = time.perf_counter() - t0
    return MulticlassModel(strategy, {t[0]: m for t, m in zip(tasks, fitted)}, ds.label_names,
                           ds.d, scaler, {"total_seconds": elapsed})


def train_ovo(ds: LabeledDataset, c_grid: Sequence[float] = DESK_C_GRID, cv_k: int = 10,
              seed: int = 42, standardize: bool = False, workers: int = 1) -> MulticlassModel:
    tasks = []
    for a, b in combinations(range(1, ds.n_classes + 1), 2):
        rows = np.flatnonzero((ds.labels == a) | (ds.labels == b))
        tasks.append(((a, b), rows, np.where(ds.labels[rows] == a, 1.0, -1.0)))
    return _train_ensemble("ovo", ds, tasks, c_grid, cv_k, seed, standardize, workers)


def train_ovr(ds: LabeledDataset, c_grid: Sequence[float] = DESK_C_GRID, cv_k: int = 10,
              seed: int = 42, standardize: bool = False, workers: int = 1) -> MulticlassModel:
    rows = np.arange(ds.n)
    tasks = [(k, rows, np.where(ds.labels == k, 1.0, -1.0)) for k in range(1, ds.n_classes + 1)]
    return _train_ensemble("ovr", ds, tasks, c_grid, cv_k, seed, standardize, workers)


def _prepare(model, features):
    X = _check_dim(features, model.n_features)
    if model.preprocessing is not None:
        X = model.preprocessing.transform(X)
    return X


def predict_ovo(model: MulticlassModel, features) -> np.ndarray:
    """Majority vote over pairwise models; ties go to the smaller class id."""
    X = _prepare(model, features)
    K = len(model.label_names)
    votes = np.zeros((X.shape[0], K), dtype=np.int64)
    for (a, b), m in model.models.items():
        pos = predict_margin(m, X) >= 0
        votes[pos, a - 1] += 1
        votes[~pos, b - 1] += 1
    return np.argmax(votes, axis=1) + 1


def predict_ovr(model: MulticlassModel, features) -> np.ndarray:
    X = _prepare(model, features)
    margins = np.column_stack([predict_margin(model.models[k], X)
                               for k in range(1, len(model.label_names) + 1)])
    return np.argmax(margins, axis=1) + 1


def predict_any(model, features) -> np.ndarray:
    if isinstance(model, SmartSvmModel):
        return predict(model, features)
    if model.strategy == "ovo":
        return predict_ovo(model, features)
    return predict_ovr(model, features)


def model_from_json(doc: dict):
    if doc.get("version") == MODEL_VERSION:
        return SmartSvmModel.from_json(doc)
    return MulticlassModel.from_json(doc)


AGGREGATES: Mapping[str, Callable[[np.ndarray], float]] = {
    "mean": lambda v: float(np.mean(v)),
    "worst": lambda v: float(np.max(v)),
}


def ber_objective(ds: LabeledDataset, n_trees: int = 3, seed: int = 0,
                  aggregate: str = "mean") -> float:
    """Aggregate of the off-diagonal normalized pairwise BER estimates."""
    M = normalized_matrix(pairwise_ber_matrix(ds, n_trees, seed))
    return AGGREGATES[aggregate](M[~np.eye(M.shape[0], dtype=bool)])


def forward_feature_select(ds: LabeledDataset, max_features: int, n_trees: int = 3,
                           seed: int = 0, aggregate: str = "mean") -> list[int]:
    """Greedy forward selection minimizing the BER objective at each step.

    Ties go to the lowest feature index.
    """
    if not 1 <= max_features <= ds.d:
        raise ValueError(f"max_features must lie in [1, {ds.d}]")
    chosen: list[int] = []
    for _ in range(max_features):
        best_j, best_v = -1, np.inf
        for j in range(ds.d):
            if j in chosen:
                continue
            v = ber_objective(ds.with_features(ds.features[:, chosen + [j]]), n_trees, seed,
                              aggregate)
            if v < best_v:
                best_j, best_v = j, v
        chosen.append(best_j)
    return chosen


def compare_transformations(ds: LabeledDataset, transforms: Mapping[str, np.ndarray],
                            n_trees: int = 3, seed: int = 0,
                            aggregate: str = "mean") -> dict[str, float]:
    """BER objective of each candidate feature representation of ``ds``.

    ``transforms`` maps a name to an already transformed ``(n, d')`` matrix.
    """
    return {name: ber_objective(ds.with_features(Z), n_trees, seed, aggregate)
            for name, Z in transforms.items()}
