"""Labeled data containers, CSV ingestion and stratified resampling."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with dense class ids ``1..K``.

    ``label_names[k - 1]`` is the original label string of class ``k``.
    """

    features: np.ndarray
    labels: np.ndarray
    label_names: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels, dtype=np.int64)
        if X.ndim != 2:
            raise DataError("features must be a 2-D array")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError("labels must be a vector with one entry per row")
        if X.shape[0] < 2 or X.shape[1] < 1:
            raise DataError(f"need n >= 2 and d >= 1, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        K = len(self.label_names)
        if K < 2:
            raise DataError("fewer than 2 classes")
        counts = np.bincount(y, minlength=K + 1)
        if y.min() < 1 or y.max() > K or np.any(counts[1:] == 0):
            raise DataError("every class id 1..K must appear at least once")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "label_names", tuple(str(s) for s in self.label_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.label_names)

    @property
    def class_ids(self) -> np.ndarray:
        return np.arange(1, self.n_classes + 1)

    @property
    def counts(self) -> np.ndarray:
        """Per-class sample counts, indexed by ``class_id - 1``."""
        return np.bincount(self.labels, minlength=self.n_classes + 1)[1:]

    @property
    def priors(self) -> np.ndarray:
        return self.counts / self.n

    def name_of(self, class_id: int) -> str:
        return self.label_names[class_id - 1]

    def take(self, idx) -> "LabeledDataset":
        """Row subset keeping the full class map (every class must remain)."""
        idx = np.asarray(idx)
        return LabeledDataset(self.features[idx], self.labels[idx], self.label_names)

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(features, self.labels, self.label_names)


def from_arrays(features, labels) -> LabeledDataset:
    """Build a dataset from raw labels of any hashable type.

    Labels are re-encoded in order of first appearance.
    """
    ids: dict = {}
    encoded = np.empty(len(labels), dtype=np.int64)
    for i, lab in enumerate(labels):
        encoded[i] = ids.setdefault(lab, len(ids) + 1)
    names = [str(lab) for lab in ids]
    if len(names) < 2:
        raise DataError("fewer than 2 classes")
    return LabeledDataset(np.asarray(features, dtype=np.float64), encoded, tuple(names))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: int | str = -1) -> LabeledDataset:
    """Read a comma-separated file with an optional header row.

    A header is assumed when any feature cell of the first line does not
    parse as a number, or when the label column is given by name. ``label_column`` is a header name or a 0-based index (negative
    indices count from the end).
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    while rows and not any(c.strip() for c in rows[-1]):
        rows.pop()
    if not rows:
        raise DataError(f"empty file: {path}")

    width = len(rows[0])
    named = isinstance(label_column, str) and not _is_int(label_column)
    if named:
        col = None
    else:
        col = int(label_column)
        if not -width <= col < width:
            raise DataError(f"label column index {col} out of range for {width} columns")
        col %= width
    # a header is a first line whose feature cells are not all numeric
    header = None
    if named or not all(_is_number(c) for j, c in enumerate(rows[0]) if j != col):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if named:
        if header is None or label_column not in header:
            raise DataError(f"label column {label_column!r} not found")
        col = header.index(label_column)

    features, labels = [], []
    first_line = 2 if header is not None else 1
    for r, row in enumerate(rows, start=first_line):
        if not any(c.strip() for c in row):
            raise DataError(f"empty row at line {r}")
        if len(row) != width:
            raise DataError(f"line {r}: expected {width} columns, got {len(row)}")
        vals = []
        for c, cell in enumerate(row):
            if c == col:
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"non-numeric cell at line {r}, column {c}: {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"non-finite cell at line {r}, column {c}: {cell!r}")
            vals.append(v)
        features.append(vals)
        labels.append(row[col].strip())
    if len(features) < 2:
        raise DataError("need at least 2 data rows")
    return from_arrays(np.array(features, dtype=np.float64), labels)


def _is_int(s: str) -> bool:
    try:
        int(s)
    except ValueError:
        return False
    return True


def save_csv(ds: LabeledDataset, path, feature_names: Sequence[str] | None = None) -> None:
    """Write features followed by a ``label`` column, with a header row.

    Floats are written with ``repr`` so that reloading is bit-exact.
    """
    names = list(feature_names) if feature_names else [f"x{j}" for j in range(ds.d)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["label"])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [ds.name_of(int(lab))])


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.fold_of == fold
        return np.flatnonzero(~test), np.flatnonzero(test)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split(ds: LabeledDataset, train_fraction: float, seed: int):
    """Split into (train, test) with per-class proportions preserved."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for k, n_k in zip(ds.class_ids, ds.counts):
        if n_k < 2:
            raise DataError(f"class {ds.name_of(int(k))!r} has only 1 sample; cannot split")
        members = np.flatnonzero(ds.labels == k)
        rng.shuffle(members)
        n_train = min(max(_round_half_up(train_fraction * n_k), 1), n_k - 1)
        train_idx.append(members[:n_train])
        test_idx.append(members[n_train:])
    train = np.sort(np.concatenate(train_idx))
    test = np.sort(np.concatenate(test_idx))
    return ds.take(train), ds.take(test)


def kfold(ds: LabeledDataset, k: int, seed: int) -> FoldAssignment:
    """Stratified k-fold assignment.

    Each class is dealt round-robin over the folds after shuffling, with the
    starting fold carried over between classes so fold sizes stay balanced.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > ds.n:
        raise DataError(f"k={k} exceeds the number of samples n={ds.n}")
    if np.any(ds.counts < k):
        small = [ds.name_of(int(c)) for c in ds.class_ids[ds.counts < k]]
        warnings.warn(f"classes {small} have fewer than k={k} samples; some folds lack them",
                      stacklevel=2)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(ds.n, dtype=np.int64)
    offset = 0
    for c in ds.class_ids:
        members = np.flatnonzero(ds.labels == c)
        rng.shuffle(members)
        fold_of[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    return FoldAssignment(fold_of, k)
