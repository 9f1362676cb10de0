"""Random graph generators: stochastic blockmodels and GRDPG latent positions.

Membership vectors are integer arrays with 0-based labels ``0..K-1``.
Adjacency matrices are float arrays with entries in {0, 1}; self-loops are
sampled like any other pair unless ``loops=False``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "SbmParams",
    "LatentPositions",
    "make_rng",
    "derive_seed",
    "block_counts",
    "indicator_matrix",
    "sample_memberships",
    "sample_sbm",
    "expected_matrix",
    "sample_grdpg",
    "hardy_weinberg_curve",
    "hardy_weinberg_positions",
    "sbm_latent_positions",
]


def make_rng(seed):
    """Generator from an int, a SeedSequence, or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_seed(master, *keys):
    """Independent child stream for ``(master, *keys)``; order-free."""
    return np.random.SeedSequence([int(master), *(int(k) for k in keys)])


@dataclass(frozen=True)
class SbmParams:
    """Block connectivity ``B``, community prior ``pi`` and sparsity ``rho``."""

    B: np.ndarray
    pi: np.ndarray
    rho: float = 1.0

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        pi = np.array(self.pi, dtype=float).reshape(-1)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise DimensionError(f"B must be square, got shape {B.shape}")
        if B.shape[0] != pi.size:
            raise DimensionError(f"B has order {B.shape[0]} but pi has length {pi.size}")
        if not np.allclose(B, B.T, rtol=0, atol=1e-12):
            raise DomainError("B must be symmetric")
        if np.any(B <= 0) or np.any(B >= 1):
            raise DomainError("entries of B must lie in the open interval (0, 1)")
        if np.any(pi <= 0) or np.any(pi > 1) or abs(pi.sum() - 1) > 1e-12:
            raise DomainError(f"pi must be a positive probability vector, got {pi}")
        if not 0 < self.rho <= 1:
            raise DomainError(f"rho must lie in (0, 1], got {self.rho}")
        B = (B + B.T) / 2
        B.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def K(self) -> int:
        return self.pi.size

    def with_rho(self, rho):
        return SbmParams(self.B, self.pi, rho)


def block_counts(tau, K):
    return np.bincount(np.asarray(tau), minlength=K)


def indicator_matrix(tau, K=None):
    """One-hot ``n x K`` matrix whose column k is the indicator ``s_k``."""
    tau = np.asarray(tau)
    if K is None:
        K = int(tau.max()) + 1 if tau.size else 0
    Z = np.zeros((tau.size, K))
    Z[np.arange(tau.size), tau] = 1.0
    return Z


def sample_memberships(pi, n, seed):
    """``n`` i.i.d. categorical labels with probabilities ``pi``."""
    pi = np.asarray(pi, dtype=float)
    rng = make_rng(seed)
    return rng.choice(pi.size, size=n, p=pi / pi.sum())


def expected_matrix(params, tau):
    """``P_ij = rho * B[tau_i, tau_j]``, diagonal included."""
    tau = np.asarray(tau)
    if tau.size and tau.max() >= params.K:
        raise DimensionError(f"label {tau.max()} exceeds K-1 = {params.K - 1}")
    return (params.rho * params.B)[tau][:, tau]


def _bernoulli_symmetric(P, rng, loops=True):
    n = P.shape[0]
    A = np.triu(rng.random((n, n)) < P)
    A = A | A.T
    if not loops:
        np.fill_diagonal(A, False)
    return A.astype(float)


def sample_sbm(params, tau, seed, *, loops=True):
    """Adjacency matrix with independent ``Bernoulli(P_ij)`` for ``i <= j``."""
    P = expected_matrix(params, tau)
    return _bernoulli_symmetric(P, make_rng(seed), loops=loops)


@dataclass(frozen=True)
class LatentPositions:
    """Rows of ``X`` are latent positions; ``signature = (p, q)``."""

    X: np.ndarray
    signature: tuple = field(default=None)

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        sig = self.signature
        if sig is None:
            sig = (X.shape[1], 0)
        p, q = (int(s) for s in sig)
        if p + q != X.shape[1] or p < 0 or q < 0:
            raise DimensionError(f"signature {sig} does not match d = {X.shape[1]}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "signature", (p, q))

    def ipq(self):
        p, q = self.signature
        return np.diag(np.r_[np.ones(p), -np.ones(q)])

    def probabilities(self):
        return self.X @ self.ipq() @ self.X.T


def sample_grdpg(latent, seed, *, loops=True, atol=1e-12):
    """Sample ``A_ij ~ Bernoulli((X I_pq X^T)_ij)`` independently for ``i <= j``."""
    P = latent.probabilities()
    bad = (P < -atol) | (P > 1 + atol)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DomainError(
            f"edge probability {P[i, j]:.6g} at ({i}, {j}) lies outside [0, 1]"
        )
    return _bernoulli_symmetric(np.clip(P, 0.0, 1.0), make_rng(seed), loops=loops)


def sbm_latent_positions(params, tau):
    """GRDPG latent positions reproducing an SBM: row i is ``nu[tau_i]``."""
    w, V = np.linalg.eigh(params.B * params.rho)
    keep = np.abs(w) > 1e-10 * np.abs(w).max()
    w, V = w[keep], V[:, keep]
    o = np.lexsort((-np.sign(w),))  # positive eigenvalues first
    w, V = w[o], V[:, o]
    nu = V * np.sqrt(np.abs(w))
    return LatentPositions(nu[np.asarray(tau)], (int((w > 0).sum()), int((w < 0).sum())))


def hardy_weinberg_curve(t):
    t = np.asarray(t, dtype=float)
    return np.column_stack([t**2, 2 * t * (1 - t), (1 - t) ** 2])


def hardy_weinberg_positions(weight, beta1, beta2, n, seed):
    """Latent positions on the Hardy-Weinberg curve from a two-Beta mixture.

    ``t_i ~ weight * Beta(*beta1) + (1 - weight) * Beta(*beta2)``. Returns the
    positions (signature ``(3, 0)``) and the mixture component of each draw
    as the oracle membership (0 for the first component).
    """
    if not 0 < weight < 1:
        raise DomainError(f"mixture weight must lie in (0, 1), got {weight}")
    if min(*beta1, *beta2) <= 0:
        raise DomainError("Beta parameters must be positive")
    rng = make_rng(seed)
    comp = (rng.random(n) >= weight).astype(int)
    t = np.where(
        comp == 0,
        rng.beta(beta1[0], beta1[1], size=n),
        rng.beta(beta2[0], beta2[1], size=n),
    )
    return LatentPositions(hardy_weinberg_curve(t), (3, 0)), comp
