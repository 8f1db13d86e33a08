"""L2-regularized hinge-loss linear SVM trained by dual coordinate descent.

The intercept is an extra constant-1 feature and is regularized together
with the weights, so the problem is

    min_w  1/2 |w|^2 + C * sum_i max(0, 1 - y_i w.x_i)

with dual ``max_a  sum(a) - 1/2 |sum_i a_i y_i x_i|^2``, ``0 <= a_i <= C``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .dataset import FoldAssignment

DESK_C_GRID = tuple(2.0 ** e for e in range(-6, 7, 2))
PAPER_C_GRID = tuple(2.0 ** e for e in range(-18, 19, 2))


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray  # length d + 1, intercept last
    c_value: float
    train_objective: float
    dual_objective: float = float("nan")
    epochs: int = 0
    dual_history: tuple = field(default=(), repr=False, compare=False)

    @property
    def gap(self) -> float:
        return (self.train_objective - self.dual_objective) / max(abs(self.train_objective), 1e-12)

    def to_json(self) -> dict:
        return {"weights": [float(v) for v in self.weights], "c": self.c_value,
                "objective": self.train_objective}

    @classmethod
    def from_json(cls, doc: dict) -> "LinearModel":
        return cls(np.asarray(doc["weights"], dtype=np.float64), float(doc["c"]),
                   float(doc["objective"]))


def augment(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    return np.hstack([X, np.ones((X.shape[0], 1))])


@numba.njit(cache=True, nogil=True)
def _dual_cd(Xa, y, C, tol, max_epochs, seed):
    n, p = Xa.shape
    np.random.seed(seed)
    qdiag = np.zeros(n)
    for i in range(n):
        for j in range(p):
            qdiag[i] += Xa[i, j] * Xa[i, j]
    alpha = np.zeros(n)
    w = np.zeros(p)
    history = np.empty(max_epochs)
    primal = dual = np.nan
    # shrinking: coordinates stuck at a bound leave the active set until the
    # active problem is solved, then everything is re-examined
    active = np.arange(n)
    n_active = n
    pg_max_old = np.inf
    pg_min_old = -np.inf
    epoch = 0
    while epoch < max_epochs:
        pg_max = -np.inf
        pg_min = np.inf
        perm = np.random.permutation(n_active)
        keep = np.ones(n_active, dtype=np.bool_)
        for s in range(n_active):
            t = perm[s]
            i = active[t]
            G = 0.0
            for j in range(p):
                G += w[j] * Xa[i, j]
            G = y[i] * G - 1.0
            a = alpha[i]
            pg = 0.0
            if a == 0.0:
                if G > pg_max_old:
                    keep[t] = False
                    continue
                pg = min(G, 0.0)
            elif a == C:
                if G < pg_min_old:
                    keep[t] = False
                    continue
                pg = max(G, 0.0)
            else:
                pg = G
            pg_max = max(pg_max, pg)
            pg_min = min(pg_min, pg)
            if pg != 0.0:
                new = min(max(a - G / qdiag[i], 0.0), C)
                if new != a:
                    step = (new - a) * y[i]
                    for j in range(p):
                        w[j] += step * Xa[i, j]
                    alpha[i] = new
        active = active[keep]
        n_active = active.size

        # rebuild w from alpha to drop accumulated round-off, then score both objectives
        w[:] = 0.0
        asum = 0.0
        for i in range(n):
            asum += alpha[i]
            if alpha[i] != 0.0:
                ay = alpha[i] * y[i]
                for j in range(p):
                    w[j] += ay * Xa[i, j]
        ww = 0.0
        for j in range(p):
            ww += w[j] * w[j]
        dual = asum - 0.5 * ww
        history[epoch] = dual
        epoch += 1
        hinge = 0.0
        for i in range(n):
            m = 0.0
            for j in range(p):
                m += w[j] * Xa[i, j]
            hinge += max(0.0, 1.0 - y[i] * m)
        primal = 0.5 * ww + C * hinge
        if primal - dual <= tol * max(abs(primal), 1e-12):
            break

        if n_active == 0 or pg_max - pg_min <= 1e-3:
            active = np.arange(n)
            n_active = n
            pg_max_old = np.inf
            pg_min_old = -np.inf
        else:
            pg_max_old = pg_max if pg_max > 0 else np.inf
            pg_min_old = pg_min if pg_min < 0 else -np.inf
    return w, primal, dual, epoch, history[:epoch]


def primal_objective(w, Xa, y, C) -> float:
    hinge = np.maximum(0.0, 1.0 - y * (Xa @ w))
    return 0.5 * float(w @ w) + C * float(hinge.sum())


def train_binary(features, signs, c: float, tol: float = 1e-4, max_epochs: int = 5000,
                 seed: int = 0) -> LinearModel:
    """Fit the SVM until the relative duality gap is at most ``tol``.

    Coordinates are visited in a fresh random order each epoch, drawn from a
    generator seeded with ``seed``.
    """
    y = np.asarray(signs, dtype=np.float64)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("signs must be +1 or -1")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise ValueError("both signs must be present")
    if not c > 0:
        raise ValueError("C must be positive")
    Xa = augment(features)
    if Xa.shape[0] != y.size:
        raise ValueError("features and signs differ in length")
    if not np.all(np.isfinite(Xa)):
        raise ValueError("non-finite features")
    w, primal, dual, epochs, history = _dual_cd(np.ascontiguousarray(Xa), y, float(c), float(tol),
                                                int(max_epochs), int(seed) % 2**32)
    return LinearModel(w, float(c), float(primal), float(dual), int(epochs), tuple(history))


def predict_margin(model: LinearModel, x) -> np.ndarray | float:
    """Augmented inner product ``w . [x, 1]``; scalar for a single vector."""
    x = np.asarray(x, dtype=np.float64)
    d = model.weights.size - 1
    if x.shape[-1] != d:
        raise ValueError(f"expected {d} features, got {x.shape[-1]}")
    m = x @ model.weights[:-1] + model.weights[-1]
    return float(m) if x.ndim == 1 else m


def select_c(features, signs, grid, folds: FoldAssignment, seed: int = 0) -> tuple[float, float]:
    """Grid value with the best mean fold accuracy; ties go to the smaller C."""
    if len(grid) == 0:
        raise ValueError("empty C grid")
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(signs, dtype=np.float64)
    best_c, best_acc = None, -1.0
    for c in sorted(grid):
        accs = []
        for f in range(folds.k):
            tr, te = folds.train_test(f)
            if te.size == 0:
                continue
            model = train_binary(X[tr], y[tr], c, seed=seed)
            pred = np.where(predict_margin(model, X[te]) >= 0, 1.0, -1.0)
            accs.append(float(np.mean(pred == y[te])))
        acc = float(np.mean(accs))
        if acc > best_acc:
            best_c, best_acc = float(c), acc
    return best_c, best_acc
