"""Dense matrix kernels: half-vectorization, structural matrices, eigensystems.

Conventions
-----------
``vec`` stacks columns. ``vech`` stacks the lower triangle (diagonal
included) column by column, i.e. ``(0,0), (1,0), ..., (n-1,0), (1,1), ...``.
Eigenvalues are always ordered by descending absolute value; ties put the
positive value first, then the lower index in the solver's output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import DimensionError, NumericalError

__all__ = [
    "EigenSystem",
    "vec",
    "vech",
    "unvech",
    "elimination_matrix",
    "duplication_matrix",
    "sym_eig",
    "top_eigenpairs",
    "low_rank_truncate",
    "kron",
    "hadamard",
    "signature_matrix",
]


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of a symmetric matrix, ordered by descending ``|value|``.

    ``vectors[:, i]`` pairs with ``values[i]``. A partial system (fewer
    columns than the matrix order) is produced by :func:`top_eigenpairs`.
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def order(self) -> int:
        return self.vectors.shape[0]

    def __len__(self) -> int:
        return len(self.values)


def _square(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    return M


def vec(M):
    """Column-major stacking of ``M``."""
    return np.asarray(M).reshape(-1, order="F")


def vech(M):
    """Half-vectorization (column-major lower triangle, diagonal included)."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"vech needs a square matrix, got shape {M.shape}")
    return M.T[np.triu_indices(M.shape[0])]


def _vech_order(n):
    # row/col index arrays of the lower triangle, in vech order
    r, c = np.triu_indices(n)
    return c, r


def unvech(v, n):
    """Inverse of :func:`vech`: rebuild the symmetric ``n x n`` matrix."""
    v = np.asarray(v)
    if v.ndim != 1 or v.size != n * (n + 1) // 2:
        raise DimensionError(
            f"vector of length {v.size} cannot be unvech'd to order {n}; "
            f"expected {n * (n + 1) // 2}"
        )
    rows, cols = _vech_order(n)
    M = np.zeros((n, n), dtype=v.dtype)
    M[rows, cols] = v
    M[cols, rows] = v
    return M


def elimination_matrix(n):
    """The ``n(n+1)/2 x n^2`` matrix L with ``L @ vec(M) == vech(M)``."""
    if n < 1:
        raise DimensionError("order must be >= 1")
    rows, cols = _vech_order(n)
    L = np.zeros((rows.size, n * n))
    L[np.arange(rows.size), cols * n + rows] = 1.0
    return L


def duplication_matrix(n):
    """The ``n^2 x n(n+1)/2`` matrix D with ``D @ vech(M) == vec(M)``."""
    if n < 1:
        raise DimensionError("order must be >= 1")
    rows, cols = _vech_order(n)
    D = np.zeros((n * n, rows.size))
    idx = np.arange(rows.size)
    D[cols * n + rows, idx] = 1.0
    D[rows * n + cols, idx] = 1.0
    return D


def _abs_order(values):
    # primary: |value| descending; then positive first; then input position
    pos = np.arange(values.size)
    return np.lexsort((pos, -np.sign(values), -np.abs(values)))


def sym_eig(M):
    """Full eigendecomposition of a symmetric matrix, ordered by ``|value|``."""
    M = _square(M)
    if not np.all(np.isfinite(M)):
        raise DimensionError("matrix has non-finite entries")
    try:
        w, U = scipy.linalg.eigh(M, lower=True, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise NumericalError(
            f"symmetric eigensolver failed for matrix of order {M.shape[0]}: {exc}"
        ) from exc
    o = _abs_order(w)
    return EigenSystem(w[o], U[:, o])


def top_eigenpairs(M, d, *, tol=1e-11, maxiter=None, seed=0):
    """Leading ``d`` eigenpairs (by ``|value|``) of a symmetric matrix.

    Large matrices use implicitly restarted Lanczos (ARPACK) from a start
    vector fixed by ``seed``, so the result is a deterministic function of
    ``M``. Pairs must satisfy ``||M u - l u|| <= tol * |l_1|``; small
    matrices, non-convergence or a failed residual check fall back to the
    full dense solver.
    """
    M = _square(M)
    n = M.shape[0]
    if not 1 <= d <= n:
        raise DimensionError(f"d={d} outside [1, {n}]")
    if n <= 300 or 4 * (d + 10) >= n:
        E = sym_eig(M)
        return EigenSystem(E.values[:d].copy(), E.vectors[:, :d].copy())

    v0 = np.random.default_rng(seed).standard_normal(n)
    try:
        w, V = scipy.sparse.linalg.eigsh(M, k=d, which="LM", v0=v0, tol=0, maxiter=maxiter)
    except scipy.sparse.linalg.ArpackError:
        w = None
    if w is not None:
        o = _abs_order(w)
        w, V = w[o], V[:, o]
        resid = np.linalg.norm(M @ V - V * w, axis=0)
        if np.all(resid <= tol * max(abs(w[0]), 1.0)):
            return EigenSystem(w, V)
    E = sym_eig(M)
    return EigenSystem(E.values[:d].copy(), E.vectors[:, :d].copy())


def low_rank_truncate(E, d):
    """Rank-``d`` truncation ``sum_{i<d} values[i] u_i u_i^T``."""
    if not 1 <= d <= len(E):
        raise DimensionError(f"d={d} outside [1, {len(E)}]")
    U = E.vectors[:, :d]
    out = (U * E.values[:d]) @ U.T
    return (out + out.T) / 2


def kron(A, B):
    return np.kron(np.asarray(A), np.asarray(B))


def hadamard(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise DimensionError(f"hadamard shape mismatch: {A.shape} vs {B.shape}")
    return A * B


def signature_matrix(values):
    """``I_{p,q}`` built from the signs of ``values`` (zeros count as +1)."""
    return np.diag(np.where(np.asarray(values) < 0, -1.0, 1.0))
