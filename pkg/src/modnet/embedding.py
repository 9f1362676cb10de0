"""Adjacency spectral embedding, rank selection and node clustering."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import DimensionError, DomainError
from .linalg import EigenSystem, top_eigenpairs

__all__ = [
    "Embedding",
    "ClusterResult",
    "spectral_embed",
    "estimate_rank",
    "kmeans",
    "gmm_em",
    "align_labels",
    "relabel",
    "adjusted_rand_index",
]


@dataclass(frozen=True)
class Embedding:
    """Rows of ``coords`` embed the nodes; columns follow ``|values|`` order."""

    coords: np.ndarray
    values: np.ndarray

    @property
    def source_rank(self) -> int:
        return self.coords.shape[1]

    @property
    def signs(self):
        return np.where(self.values < 0, -1.0, 1.0)

    def gram(self):
        """``coords I_pq coords^T``, the rank-d truncation of the input."""
        return (self.coords * self.signs) @ self.coords.T


@dataclass
class ClusterResult:
    labels: np.ndarray
    centers: np.ndarray
    objective: float
    history: list = field(default_factory=list)


def spectral_embed(A, d, eigensystem: EigenSystem | None = None):
    """Embed with the top-``d`` eigenpairs scaled as ``U |Lambda|^{1/2}``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if not 1 <= d <= n:
        raise DimensionError(f"embedding dimension d={d} outside [1, {n}]")
    E = eigensystem if eigensystem is not None else top_eigenpairs(A, d)
    if len(E) < d:
        raise DimensionError(f"eigensystem holds {len(E)} pairs, need {d}")
    vals = E.values[:d]
    return Embedding(E.vectors[:, :d] * np.sqrt(np.abs(vals)), vals.copy())


def estimate_rank(values, d_max):
    """Eigenvalue ratio test: argmax of ``|v_i| / |v_{i+1}|`` over ``i <= d_max``.

    ``values`` must be ordered by descending magnitude and hold at least
    ``d_max + 1`` entries. Returns a 1-based dimension. Ties go to the
    smallest index; a zero eigenvalue at position ``i + 1`` stops the scan
    and returns ``i``.
    """
    a = np.abs(np.asarray(values, dtype=float))
    if d_max < 1 or a.size < d_max + 1:
        raise DimensionError(f"need at least d_max + 1 = {d_max + 1} eigenvalues")
    best, best_ratio = 1, -np.inf
    for i in range(d_max):
        if a[i + 1] == 0:
            return i + 1
        ratio = a[i] / a[i + 1]
        if ratio > best_ratio:
            best, best_ratio = i + 1, ratio
    return best


def _sqdist(X, C):
    d2 = (X**2).sum(1)[:, None] - 2 * X @ C.T + (C**2).sum(1)[None, :]
    return np.maximum(d2, 0.0)


def _kmeanspp(X, K, rng):
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sqdist(X, centers[:1]).ravel()
    for k in range(1, K):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centers[k] = X[idx]
        closest = np.minimum(closest, _sqdist(X, centers[k : k + 1]).ravel())
    return centers


def _lloyd(X, centers, max_iter=300, rtol=1e-10):
    K = centers.shape[0]
    prev = np.inf
    for _ in range(max_iter):
        d2 = _sqdist(X, centers)
        labels = d2.argmin(1)
        obj = d2[np.arange(X.shape[0]), labels].sum()
        counts = np.bincount(labels, minlength=K)
        for k in np.flatnonzero(counts == 0):
            # empty cluster: move its center onto the worst-served point
            far = d2[np.arange(X.shape[0]), labels].argmax()
            labels[far] = k
            d2[far] = 0.0
            counts = np.bincount(labels, minlength=K)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        centers = sums / counts[:, None]
        if np.isfinite(prev) and abs(prev - obj) <= rtol * max(abs(prev), 1e-300):
            break
        prev = obj
    d2 = _sqdist(X, centers)
    labels = d2.argmin(1)
    obj = float(d2[np.arange(X.shape[0]), labels].sum())
    return labels, centers, obj


def kmeans(rows, K, restarts=20, seed=0):
    """Lloyd's algorithm with k-means++ seeding; best of ``restarts`` runs."""
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not 1 <= K <= X.shape[0]:
        raise DimensionError(f"K={K} must lie in [1, n={X.shape[0]}]")
    if isinstance(seed, np.random.SeedSequence):
        # fresh copy: spawn() on a shared sequence would not be repeatable
        children = np.random.SeedSequence(seed.entropy, spawn_key=seed.spawn_key)
    else:
        children = np.random.SeedSequence(seed)
    best = None
    history = []
    for child in children.spawn(max(1, restarts)):
        rng = np.random.default_rng(child)
        labels, centers, obj = _lloyd(X, _kmeanspp(X, K, rng))
        history.append(obj)
        if best is None or obj < best[2]:
            best = (labels, centers, obj)
    return ClusterResult(best[0], best[1], best[2], history)


def _diag_gauss_logpdf(X, means, var):
    # log N(x | mean_k, diag(var_k)) for every row and component
    out = -0.5 * (
        np.log(2 * np.pi * var).sum(1)[None, :]
        + (X**2) @ (1 / var).T
        - 2 * X @ (means / var).T
        + ((means**2) / var).sum(1)[None, :]
    )
    return out


def gmm_em(rows, K, seed=0, *, max_iter=200, tol=1e-8, var_floor=1e-6, restarts=20):
    """Diagonal-covariance Gaussian mixture fitted by EM, seeded by k-means.

    ``objective`` is the final log-likelihood and ``history`` its trace,
    which EM guarantees to be non-decreasing up to rounding.
    """
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, d = X.shape
    if not 1 <= K <= n:
        raise DimensionError(f"K={K} must lie in [1, n={n}]")
    init = kmeans(X, K, restarts=restarts, seed=seed)
    resp = np.zeros((n, K))
    resp[np.arange(n), init.labels] = 1.0
    history = []
    means = init.centers
    for _ in range(max_iter):
        Nk = resp.sum(0) + 1e-300
        weights = Nk / n
        means = (resp.T @ X) / Nk[:, None]
        var = (resp.T @ X**2) / Nk[:, None] - means**2
        var = np.maximum(var, var_floor)
        logp = _diag_gauss_logpdf(X, means, var) + np.log(np.maximum(weights, 1e-300))
        norm = logsumexp(logp, axis=1)
        ll = float(norm.sum())
        resp = np.exp(logp - norm[:, None])
        history.append(ll)
        if len(history) > 1 and abs(history[-1] - history[-2]) <= tol * max(1.0, abs(ll)):
            break
    labels = resp.argmax(1)
    return ClusterResult(labels, means, history[-1], history)


def _confusion(est, ref, Ke, Kr):
    C = np.zeros((Ke, Kr), dtype=np.int64)
    np.add.at(C, (est, ref), 1)
    return C


def align_labels(est, ref):
    """Relabelling of ``est`` that maximizes agreement with ``ref``.

    Returns ``(perm, agreement)`` where ``perm[e]`` is the reference label
    assigned to estimated label ``e``. Up to 8 labels the search is
    exhaustive; beyond that an optimal assignment on the confusion matrix
    is used. Estimated labels left unmatched (when ``est`` has more labels)
    receive fresh labels ``>= K_ref``.
    """
    est = np.asarray(est)
    ref = np.asarray(ref)
    if est.shape != ref.shape:
        raise DimensionError("label vectors differ in length")
    Ke = int(est.max()) + 1 if est.size else 1
    Kr = int(ref.max()) + 1 if ref.size else 1
    M = max(Ke, Kr)
    C = np.zeros((M, M), dtype=np.int64)
    C[:Ke, :Kr] = _confusion(est, ref, Ke, Kr)
    if M <= 8:
        best, best_perm = -1, None
        rows = np.arange(M)
        for p in itertools.permutations(range(M)):
            score = C[rows, p].sum()
            if score > best:
                best, best_perm = score, np.array(p)
    else:
        r, c = linear_sum_assignment(-C)
        best_perm = np.empty(M, dtype=int)
        best_perm[r] = c
        best = C[r, c].sum()
    return best_perm[:Ke], int(best)


def relabel(est, perm):
    return np.asarray(perm)[np.asarray(est)]


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def adjusted_rand_index(a, b):
    """Hubert-Arabie adjusted Rand index from the contingency table."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError("label vectors differ in length")
    n = a.size
    if n < 2:
        raise DomainError("adjusted Rand index needs at least two items")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    C = _confusion(ai, bi, ai.max() + 1, bi.max() + 1)
    sum_ij = _comb2(C).sum()
    sum_a = _comb2(C.sum(1)).sum()
    sum_b = _comb2(C.sum(0)).sum()
    expected = sum_a * sum_b / _comb2(n)
    maximum = (sum_a + sum_b) / 2
    if maximum == expected:
        return 1.0
    return float((sum_ij - expected) / (maximum - expected))
