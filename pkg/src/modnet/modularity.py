"""Modularity statistics, block estimators and a Louvain maximizer.

All sums run over ordered pairs ``(i, j)`` including ``i == j``; with loop-free
data the diagonal contributes ``A_ii - P_ii = -P_ii``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError
from .linalg import EigenSystem, top_eigenpairs
from .models import block_counts, expected_matrix, indicator_matrix, make_rng

__all__ = [
    "ModularityValue",
    "BlockEstimate",
    "LouvainResult",
    "within_block_sums",
    "generic_modularity",
    "q_newman_girvan",
    "q_likelihood",
    "q_spectral",
    "q_residual",
    "modularity_triplet",
    "block_estimator_likelihood",
    "block_estimator_spectral",
    "louvain",
]


@dataclass(frozen=True)
class ModularityValue:
    """A raw modularity sum together with the ``(rho, n)`` used to scale it."""

    raw: float
    variant: str
    n: int
    rho: float = 1.0
    partition_size: int = 0
    total_weight: float | None = None  # 2m, Newman-Girvan only

    @property
    def scaled(self) -> float:
        return self.raw / (np.sqrt(self.rho) * self.n)

    @property
    def normalized(self) -> float:
        if self.total_weight is None:
            raise AttributeError("normalization by 2m is defined for Newman-Girvan only")
        return self.raw / self.total_weight


@dataclass(frozen=True)
class BlockEstimate:
    Bhat: np.ndarray
    counts: np.ndarray
    variant: str


def _labels(tau, n):
    tau = np.asarray(tau)
    if tau.shape != (n,):
        raise DimensionError(f"membership has shape {tau.shape}, expected ({n},)")
    return tau


def within_block_sums(M, tau, K=None):
    """``S[k, l] = s_k^T M s_l`` for every pair of blocks."""
    Z = indicator_matrix(tau, K)
    return Z.T @ (M @ Z)


def _within(M, tau):
    # sum_{i,j} M_ij 1{tau_i == tau_j}
    Z = indicator_matrix(tau)
    return float(((M @ Z) * Z).sum())


def _truncated_projection(E, d, tau, K=None):
    # Z^T A_hat Z through the eigenpairs, never forming A_hat
    if not 1 <= d <= len(E):
        raise DimensionError(f"d={d} outside [1, {len(E)}]")
    Z = indicator_matrix(tau, K)
    W = Z.T @ E.vectors[:, :d]
    return (W * E.values[:d]) @ W.T


def _eigs(A, d, eigensystem):
    if eigensystem is not None:
        return eigensystem
    n = A.shape[0]
    if not 1 <= d <= n:
        raise DimensionError(f"d={d} outside [1, {n}]")
    return top_eigenpairs(A, d)


def generic_modularity(A, Pnull, tau):
    """``sum_{i,j} (A_ij - P_ij) 1{tau_i = tau_j}`` for any null matrix."""
    A = np.asarray(A, dtype=float)
    Pnull = np.asarray(Pnull, dtype=float)
    if A.shape != Pnull.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"shape mismatch: A {A.shape} vs P {Pnull.shape}")
    tau = _labels(tau, A.shape[0])
    return ModularityValue(
        _within(A - Pnull, tau), "generic", A.shape[0], 1.0, np.unique(tau).size
    )


def q_newman_girvan(A, tau):
    """Newman-Girvan modularity with null ``k_i k_j / 2m``.

    ``.raw`` is the unnormalized sum, ``.normalized`` divides by ``2m``.
    """
    A = np.asarray(A, dtype=float)
    tau = _labels(tau, A.shape[0])
    k = A.sum(1)
    two_m = k.sum()
    if two_m <= 0:
        raise DomainError("Newman-Girvan modularity is undefined for an empty graph")
    _, t = np.unique(tau, return_inverse=True)
    deg_c = np.bincount(t, weights=k)
    raw = _within(A, t) - float((deg_c**2).sum()) / two_m
    return ModularityValue(raw, "NG", A.shape[0], 1.0, deg_c.size, float(two_m))


def q_likelihood(A, params, tau):
    """Likelihood modularity: null network is the SBM mean ``P``."""
    A = np.asarray(A, dtype=float)
    tau = _labels(tau, A.shape[0])
    if tau.size and tau.max() >= params.K:
        raise DimensionError(f"label {tau.max()} exceeds K-1 = {params.K - 1}")
    counts = block_counts(tau, params.K)
    null = params.rho * float((counts**2 * np.diag(params.B)).sum())
    return ModularityValue(_within(A, tau) - null, "L", A.shape[0], params.rho, params.K)


def q_spectral(A, d, params, tau, eigensystem: EigenSystem | None = None):
    """Spectral modularity: rank-``d`` truncation of ``A`` against ``P``.

    ``eigensystem`` may carry precomputed leading eigenpairs of ``A``.
    """
    A = np.asarray(A, dtype=float)
    tau = _labels(tau, A.shape[0])
    E = _eigs(A, d, eigensystem)
    counts = block_counts(tau, params.K)
    null = params.rho * float((counts**2 * np.diag(params.B)).sum())
    hat = float(np.trace(_truncated_projection(E, d, tau)))
    return ModularityValue(hat - null, "S", A.shape[0], params.rho, params.K)


def q_residual(A, d, tau, eigensystem: EigenSystem | None = None, *, rho=1.0):
    """Residual modularity: ``A`` against its own rank-``d`` truncation."""
    A = np.asarray(A, dtype=float)
    tau = _labels(tau, A.shape[0])
    E = _eigs(A, d, eigensystem)
    hat = float(np.trace(_truncated_projection(E, d, tau)))
    return ModularityValue(
        _within(A, tau) - hat, "R", A.shape[0], float(rho), np.unique(tau).size
    )


def modularity_triplet(A, d, params, tau, eigensystem=None):
    """``(Q_L, Q_S, Q_R)`` sharing one eigendecomposition."""
    E = _eigs(np.asarray(A), d, eigensystem)
    return (
        q_likelihood(A, params, tau),
        q_spectral(A, d, params, tau, E),
        q_residual(A, d, tau, E, rho=params.rho),
    )


def _normalize_blocks(S, counts, rho):
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise DomainError(f"block {empty[0]} is empty; block estimator undefined")
    return S / (np.outer(counts, counts) * rho)


def block_estimator_likelihood(A, tau, rho, K=None):
    """``Bhat_kl = s_k^T A s_l / (n_k n_l rho)``, diagonal of ``A`` included."""
    A = np.asarray(A, dtype=float)
    tau = _labels(tau, A.shape[0])
    K = int(tau.max()) + 1 if K is None else K
    counts = block_counts(tau, K)
    Bhat = _normalize_blocks(within_block_sums(A, tau, K), counts, rho)
    return BlockEstimate((Bhat + Bhat.T) / 2, counts, "L")


def block_estimator_spectral(A, tau, d, rho, K=None, eigensystem=None):
    """As :func:`block_estimator_likelihood` with the rank-``d`` truncation."""
    A = np.asarray(A, dtype=float)
    tau = _labels(tau, A.shape[0])
    K = int(tau.max()) + 1 if K is None else K
    E = _eigs(A, d, eigensystem)
    counts = block_counts(tau, K)
    Bhat = _normalize_blocks(_truncated_projection(E, d, tau, K), counts, rho)
    return BlockEstimate((Bhat + Bhat.T) / 2, counts, "S")


@dataclass
class LouvainResult:
    labels: np.ndarray
    modularity: float  # Newman-Girvan, normalized by 2m
    history: list = field(default_factory=list)

    def __iter__(self):
        yield self.labels
        yield self.modularity

    @property
    def n_communities(self) -> int:
        return int(np.unique(self.labels).size)


def _local_moves(W, rng, min_gain):
    n = W.shape[0]
    k = W.sum(1)
    two_m = k.sum()
    comm = np.arange(n)
    tot = k.copy()
    loops = np.diag(W).copy()
    moved_any = False
    while True:
        moved = 0
        for i in rng.permutation(n):
            ci = comm[i]
            w_to = np.bincount(comm, weights=W[i], minlength=n)
            w_to[ci] -= loops[i]
            tot[ci] -= k[i]
            gain = w_to - tot * (k[i] / two_m)
            cand = np.flatnonzero(w_to > 0)
            best = ci
            if cand.size:
                j = cand[np.argmax(gain[cand])]
                if gain[j] > gain[ci] + min_gain:
                    best = j
            tot[best] += k[i]
            if best != ci:
                comm[i] = best
                moved += 1
        if moved == 0:
            break
        moved_any = True
    _, comm = np.unique(comm, return_inverse=True)
    return comm, moved_any


def louvain(A, seed=0, *, min_gain=1e-10, max_levels=50):
    """Two-phase Louvain heuristic maximizing Newman-Girvan modularity.

    Local moves visit nodes in a seed-dependent random order; communities
    are then collapsed into super-nodes and the process repeats until a
    level makes no move. ``history`` holds the normalized modularity after
    each level.
    """
    W = np.asarray(A, dtype=float)
    if W.sum() <= 0:
        raise DomainError("Louvain needs a graph with at least one edge")
    rng = make_rng(seed)
    n = W.shape[0]
    labels = np.arange(n)
    history = [q_newman_girvan(W, labels).normalized]
    A0 = W
    for _ in range(max_levels):
        comm, moved = _local_moves(W, rng, min_gain)
        if not moved:
            break
        labels = comm[labels]
        history.append(q_newman_girvan(A0, labels).normalized)
        Z = indicator_matrix(comm)
        W = Z.T @ W @ Z
        if W.shape[0] == 1:
            break
    return LouvainResult(labels, history[-1], history)
