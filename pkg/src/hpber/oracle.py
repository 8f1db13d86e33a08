"""Exact reference quantities used to validate the estimators.

Discrete-support versions of the BER, the HP divergence and its bounds, the
Jensen-Shannon and Bhattacharyya bounds, and the one-vs-rest BER; closed
forms for two spherical Gaussians with a shared covariance; and a synthetic
Gaussian-mixture sampler. The ``*_sweep`` functions run randomized checks
of the inequalities relating these quantities and return violation counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import xlogy
from scipy.stats import norm

from .dataset import LabeledDataset


def _dist(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 1 or np.any(f < 0) or abs(f.sum() - 1.0) > 1e-12:
        raise ValueError("a discrete distribution is a nonnegative vector summing to 1")
    return f


def _pair(f1, f2, p1):
    f1, f2 = _dist(f1), _dist(f2)
    if f1.shape != f2.shape:
        raise ValueError(f"mismatched support sizes {f1.size} and {f2.size}")
    if not 0.0 < p1 < 1.0:
        raise ValueError("p1 must lie in (0, 1)")
    return f1, f2, 1.0 - p1


def discrete_ber(f1, f2, p1: float) -> float:
    f1, f2, p2 = _pair(f1, f2, p1)
    return float(np.minimum(p1 * f1, p2 * f2).sum())


def discrete_hp(f1, f2, p1: float) -> float:
    f1, f2, p2 = _pair(f1, f2, p1)
    a, b = p1 * f1, p2 * f2
    s = a + b
    nz = s > 0
    integral = float(((a[nz] - b[nz]) ** 2 / s[nz]).sum())
    return (integral - (p1 - p2) ** 2) / (4.0 * p1 * p2)


def hp_u(f1, f2, p1: float) -> float:
    p2 = 1.0 - p1
    return 4.0 * p1 * p2 * discrete_hp(f1, f2, p1) + (p1 - p2) ** 2


def hp_bounds_exact(f1, f2, p1: float) -> tuple[float, float]:
    u = min(max(hp_u(f1, f2, p1), 0.0), 1.0)
    return 0.5 - 0.5 * math.sqrt(u), 0.5 - 0.5 * u


def _kl2(f, g) -> float:
    # 0 log 0 := 0; g > 0 wherever f > 0 for the mixtures used here
    return float((xlogy(f, f) - xlogy(f, g)).sum() / math.log(2.0))


def discrete_js(f1, f2, p1: float) -> float:
    f1, f2, p2 = _pair(f1, f2, p1)
    M = p1 * f1 + p2 * f2
    return p1 * _kl2(f1, M) + p2 * _kl2(f2, M)


def binary_entropy(p: float) -> float:
    return float(-(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)) / math.log(2.0))


def discrete_js_bound(f1, f2, p1: float) -> float:
    """Lin's upper bound ``(H(p1) - JS) / 2`` on the BER, base-2 logs."""
    return 0.5 * (binary_entropy(p1) - discrete_js(f1, f2, p1))


def lemma_b1_check(x: float, y: float) -> bool:
    if x <= 0 or y <= 0:
        raise ValueError("x and y must be positive")
    lhs = x * math.log1p(y / x) + y * math.log1p(x / y)
    rhs = 4.0 * math.log(2.0) * x * y / (x + y)
    # both sides grow linearly in scale, so the round-off slack is relative
    return lhs - rhs >= -1e-12 * max(1.0, rhs)


def discrete_bhattacharyya_bound(f1, f2, p1: float) -> float:
    f1, f2, p2 = _pair(f1, f2, p1)
    return math.sqrt(p1 * p2) * float(np.sqrt(f1 * f2).sum())


def _mixture(fs, ps):
    fs = np.array([_dist(f) for f in fs])
    ps = np.asarray(ps, dtype=np.float64)
    if fs.shape[0] < 2 or fs.shape[0] != ps.size:
        raise ValueError("need K >= 2 distributions with one prior each")
    if np.any(ps <= 0) or abs(ps.sum() - 1.0) > 1e-12:
        raise ValueError("priors must be positive and sum to 1")
    return fs, ps


def discrete_ovr_ber(fs: Sequence, ps, k: int) -> float:
    """Bayes error of telling class ``k`` (1-based) apart from all others."""
    fs, ps = _mixture(fs, ps)
    w = ps[:, None] * fs
    own = w[k - 1]
    rest = np.delete(w, k - 1, axis=0)
    lost = rest.max(axis=0) >= own
    return float(own[lost].sum() + rest[:, ~lost].sum())


def discrete_mixture_rest(fs: Sequence, ps, k: int) -> tuple[np.ndarray, float]:
    fs, ps = _mixture(fs, ps)
    keep = np.arange(len(ps)) != k - 1
    p_g = float(ps[keep].sum())
    g = (ps[keep, None] * fs[keep]).sum(axis=0) / p_g
    return g, p_g


def discrete_pairwise_sum(fs: Sequence, ps, k: int) -> float:
    """Sum over c != k of the pairwise error ``sum_x min(p_k f_k, p_c f_c)``."""
    fs, ps = _mixture(fs, ps)
    own = ps[k - 1] * fs[k - 1]
    return float(sum(np.minimum(own, ps[c] * fs[c]).sum()
                     for c in range(len(ps)) if c != k - 1))


@dataclass(frozen=True)
class GaussianSpec:
    mean: np.ndarray
    sigma: float
    prior: float

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=np.float64)))
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.prior < 1.0:
            raise ValueError("prior must lie in (0, 1)")


def _standardized_separation(s1: GaussianSpec, s2: GaussianSpec) -> float:
    if s1.sigma != s2.sigma:
        raise ValueError("closed forms require equal sigma")
    if abs(s1.prior + s2.prior - 1.0) > 1e-12:
        raise ValueError("priors must sum to 1")
    return float(np.linalg.norm(s1.mean - s2.mean)) / s1.sigma


def gaussian_ber(s1: GaussianSpec, s2: GaussianSpec) -> float:
    delta = _standardized_separation(s1, s2)
    p1, p2 = s1.prior, s2.prior
    if delta == 0.0:
        return min(p1, p2)
    t = math.log(p2 / p1) / delta
    return float(p1 * norm.cdf(-delta / 2 + t) + p2 * norm.cdf(-delta / 2 - t))


def gaussian_bhattacharyya(s1: GaussianSpec, s2: GaussianSpec) -> float:
    delta = _standardized_separation(s1, s2)
    return math.sqrt(s1.prior * s2.prior) * math.exp(-delta ** 2 / 8.0)


def monte_carlo_gaussian(s1: GaussianSpec, s2: GaussianSpec, n_samples: int = 10**6,
                         seed: int = 20160806) -> dict:
    """Monte-Carlo BER and Bhattacharyya bound with standard errors.

    The BER estimate draws labelled samples from the mixture and scores the
    Bayes rule ``argmax_k p_k f_k(x)`` evaluated from the densities
    directly. The Bhattacharyya coefficient is the mean of
    ``sqrt(f2(x) / f1(x))`` over draws from class 1.
    """
    if s1.sigma != s2.sigma:
        raise ValueError("requires equal sigma")
    rng = np.random.default_rng(seed)
    d = s1.mean.size
    sig = s1.sigma

    def log_density(x, mu):
        return -0.5 * ((x - mu) ** 2).sum(axis=1) / sig ** 2

    from_1 = rng.random(n_samples) < s1.prior
    X = rng.standard_normal((n_samples, d)) * sig
    X += np.where(from_1[:, None], s1.mean, s2.mean)
    score1 = math.log(s1.prior) + log_density(X, s1.mean)
    score2 = math.log(s2.prior) + log_density(X, s2.mean)
    wrong = np.where(from_1, score2 > score1, score1 >= score2).astype(np.float64)
    ber = wrong.mean()
    ber_se = wrong.std(ddof=1) / math.sqrt(n_samples)

    Z = rng.standard_normal((n_samples, d)) * sig + s1.mean
    ratio = np.exp(0.5 * (log_density(Z, s2.mean) - log_density(Z, s1.mean)))
    scale = math.sqrt(s1.prior * s2.prior)
    return {
        "ber": float(ber),
        "ber_se": float(ber_se),
        "bhattacharyya": float(scale * ratio.mean()),
        "bhattacharyya_se": float(scale * ratio.std(ddof=1) / math.sqrt(n_samples)),
    }


def class_counts(priors, n: int) -> np.ndarray:
    """Largest-remainder rounding of ``priors * n`` to integers summing to n."""
    raw = np.asarray(priors, dtype=np.float64) * n
    counts = np.floor(raw).astype(np.int64)
    short = n - int(counts.sum())
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def sample_gaussian_mixture(specs: Sequence[GaussianSpec], d: int, n: int, seed: int,
                            label_names: Sequence[str] | None = None) -> LabeledDataset:
    """Draw exactly ``class_counts(priors, n)`` points per spherical Gaussian.

    Rows are grouped by class, in the order of ``specs``.
    """
    priors = [s.prior for s in specs]
    if abs(sum(priors) - 1.0) > 1e-9:
        raise ValueError("priors must sum to 1")
    if n < len(specs):
        raise ValueError("n must be at least the number of classes")
    counts = class_counts(priors, n)
    rng = np.random.default_rng(seed)
    X, y = [], []
    for k, (spec, n_k) in enumerate(zip(specs, counts), start=1):
        mean = np.zeros(d)
        mean[:spec.mean.size] = spec.mean
        if spec.mean.size > d:
            raise ValueError("mean has more coordinates than d")
        X.append(mean + spec.sigma * rng.standard_normal((n_k, d)))
        y.append(np.full(n_k, k))
    names = tuple(label_names) if label_names else tuple(str(k) for k in range(1, len(specs) + 1))
    return LabeledDataset(np.vstack(X), np.concatenate(y), names)


def two_gaussians(p1: float, delta: float, d: int = 2, sigma: float = 1.0):
    """Class 1 at the origin, class 2 at ``delta * sigma`` along the first axis."""
    mu2 = np.zeros(d)
    mu2[0] = delta * sigma
    return GaussianSpec(np.zeros(d), sigma, p1), GaussianSpec(mu2, sigma, 1.0 - p1)


def random_discrete(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.dirichlet(np.ones(m))


def theorem2_sweep(n_instances: int = 1000, seed: int = 0, slack: float = 1e-12) -> int:
    """Violations of ``lower <= BER <= upper`` over random pairs with random priors."""
    violations = 0
    for i in range(n_instances):
        rng = np.random.default_rng([seed, i])
        m = int(rng.integers(2, 21))
        f1, f2 = random_discrete(rng, m), random_discrete(rng, m)
        p1 = float(rng.uniform(0.01, 0.99))
        lo, hi = hp_bounds_exact(f1, f2, p1)
        ber = discrete_ber(f1, f2, p1)
        violations += not (lo - slack <= ber <= hi + slack)
    return violations


def js_sweep(n_instances: int = 1000, seed: int = 0, slack: float = 1e-12) -> int:
    """Violations of ``HP upper <= JS upper`` for equal priors."""
    violations = 0
    for i in range(n_instances):
        rng = np.random.default_rng([seed, i])
        m = int(rng.integers(2, 21))
        f1, f2 = random_discrete(rng, m), random_discrete(rng, m)
        violations += not (hp_bounds_exact(f1, f2, 0.5)[1] <= discrete_js_bound(f1, f2, 0.5) + slack)
    return violations


def bhattacharyya_sweep(n_instances: int = 1000, seed: int = 0, slack: float = 1e-12) -> int:
    """Violations of ``BER <= BC`` (random priors) and ``HP upper <= BC`` (equal priors)."""
    violations = 0
    for i in range(n_instances):
        rng = np.random.default_rng([seed, i])
        m = int(rng.integers(2, 21))
        f1, f2 = random_discrete(rng, m), random_discrete(rng, m)
        p1 = float(rng.uniform(0.01, 0.99))
        violations += discrete_ber(f1, f2, p1) > discrete_bhattacharyya_bound(f1, f2, p1) + slack
        violations += (hp_bounds_exact(f1, f2, 0.5)[1]
                       > discrete_bhattacharyya_bound(f1, f2, 0.5) + slack)
    return violations


def lemma_sweep(n_instances: int = 10**5, seed: int = 0) -> int:
    rng = np.random.default_rng(seed)
    xs = np.exp(rng.uniform(-10, 10, n_instances))
    ys = np.exp(rng.uniform(-10, 10, n_instances))
    return sum(not lemma_b1_check(float(x), float(y)) for x, y in zip(xs, ys))


def ovr_sweep(n_instances: int = 500, seed: int = 0, slack: float = 1e-12) -> int:
    """Violations of ``Q_k <= P_k <= F_k`` for every class of random mixtures."""
    violations = 0
    for i in range(n_instances):
        rng = np.random.default_rng([seed, i])
        K = int(rng.integers(3, 6))
        m = int(rng.integers(2, 21))
        fs = [random_discrete(rng, m) for _ in range(K)]
        ps = rng.dirichlet(np.ones(K))
        ps = np.maximum(ps, 1e-6)
        ps /= ps.sum()
        for k in range(1, K + 1):
            g, p_g = discrete_mixture_rest(fs, ps, k)
            q = discrete_ber(fs[k - 1], g, 1.0 - p_g)
            p = discrete_ovr_ber(fs, ps, k)
            f = discrete_pairwise_sum(fs, ps, k)
            violations += not (q - slack <= p <= f + slack)
    return violations
