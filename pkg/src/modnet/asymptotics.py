"""Closed-form asymptotic bias and variance of the scaled modularity statistics.

Every quantity depends only on the population parameters ``(B, pi)`` and
an explicit regime: ``DENSE`` (rho identically 1) or ``SPARSE`` (rho -> 0).
The regime is never inferred from a numeric rho.

For the statistic ``rho^{-1/2} n^{-1} Q`` the limits are

* likelihood:  N(0, pt' D^{-1} pt)
* spectral:    rho^{-1/2} pt' vech(Theta) + N(0, pt' Gamma_tilde pt)
* residual:   -rho^{-1/2} pt' vech(Theta) + N(0, pt' Gamma pt), rank(B) < K only

with ``pt = vech(diag(pi**2))``.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, TheoremInapplicableError
from .linalg import duplication_matrix, elimination_matrix, sym_eig, vech

__all__ = [
    "Regime",
    "SpectralStructure",
    "AsymptoticMoments",
    "RANK_TOL",
    "pitilde",
    "nu_factorization",
    "truncate_connectivity",
    "dmatrix",
    "theta",
    "gamma_tilde",
    "gamma",
    "moments",
    "all_moments",
    "rank_one_family",
    "geometric_family",
    "parameter_surface",
    "SURFACE_COLUMNS",
]

RANK_TOL = 1e-10


class Regime(enum.Enum):
    DENSE = "dense"
    SPARSE = "sparse"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown regime {value!r}; use 'dense' or 'sparse'") from None


@dataclass(frozen=True)
class SpectralStructure:
    """``B = nu I_pq nu^T`` plus the pi-weighted quantities built from it."""

    nu: np.ndarray
    signature: tuple
    V: np.ndarray
    values: np.ndarray
    Delta: np.ndarray
    proj_perp: np.ndarray

    @property
    def rank(self) -> int:
        return self.nu.shape[1]

    @property
    def ipq(self):
        p, q = self.signature
        return np.diag(np.r_[np.ones(p), -np.ones(q)])


@dataclass(frozen=True)
class AsymptoticMoments:
    """Limit mean (coefficient of ``rho^{-1/2}``) and variance of a scaled statistic."""

    bias: float
    variance: float
    variant: str
    regime: Regime

    def mean(self, rho=1.0):
        """Centering of ``rho^{-1/2} n^{-1} Q`` at sparsity ``rho``."""
        return self.bias / np.sqrt(rho)

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.variance))


def _check(B, pi):
    B = np.asarray(B, dtype=float)
    pi = np.asarray(pi, dtype=float).reshape(-1)
    if B.ndim != 2 or B.shape != (pi.size, pi.size):
        raise DomainError(f"B of shape {B.shape} does not match pi of length {pi.size}")
    if np.any(pi <= 0) or abs(pi.sum() - 1) > 1e-9:
        raise DomainError("pi must be a positive probability vector")
    return (B + B.T) / 2, pi


def pitilde(pi):
    """``vech(diag(pi_1^2, ..., pi_K^2))``."""
    pi = np.asarray(pi, dtype=float)
    return vech(np.diag(pi**2))


def nu_factorization(B, pi):
    """Signed square-root factorization of ``B`` and its pi-weighted projector.

    Eigenpairs with ``|value| <= RANK_TOL * |value_1|`` are discarded.
    Columns of ``nu`` list positive eigenvalues first (descending), then
    negative ones (descending magnitude), so ``I_pq = diag(1_p, -1_q)``.
    """
    B, pi = _check(B, pi)
    E = sym_eig(B)
    top = abs(E.values[0])
    if top == 0 or not np.isfinite(top):
        raise DomainError("B is numerically zero; no spectral structure")
    keep = np.abs(E.values) > RANK_TOL * top
    w, V = E.values[keep], E.vectors[:, keep]
    order = np.lexsort((-np.abs(w), w < 0))
    w, V = w[order], V[:, order]
    nu = V * np.sqrt(np.abs(w))
    Pi = np.diag(pi)
    Delta = nu.T @ Pi @ nu
    G = V.T @ Pi @ V
    proj = np.eye(pi.size) - V @ np.linalg.solve(G, V.T @ Pi)
    return SpectralStructure(
        nu=nu,
        signature=(int((w > 0).sum()), int((w < 0).sum())),
        V=V,
        values=w,
        Delta=Delta,
        proj_perp=proj,
    )


def truncate_connectivity(B, d):
    """Best rank-``d`` symmetric approximation of a connectivity matrix."""
    E = sym_eig(B)
    U = E.vectors[:, :d]
    out = (U * E.values[:d]) @ U.T
    return (out + out.T) / 2


def dmatrix(B, pi, regime):
    """Diagonal precision matrix of ``vech(Bhat_L)``, indexed in vech order."""
    B, pi = _check(B, pi)
    regime = Regime.parse(regime)
    if np.any(B <= 0) or np.any(B >= 1):
        raise DomainError("entries of B must lie in (0, 1)")
    K = pi.size
    r, c = np.triu_indices(K)
    rows, cols = c, r  # lower-triangle pairs, column-major
    b = B[rows, cols]
    denom = b * (1 + (rows == cols))
    if regime is Regime.DENSE:
        denom = denom * (1 - b)
    return np.diag(pi[rows] * pi[cols] / denom)


def _theta_middle(B, pi, regime):
    if Regime.parse(regime) is Regime.DENSE:
        return np.diag((B * (1 - B)) @ pi)
    return np.diag(B @ pi)


def theta(B, pi, regime, structure: SpectralStructure | None = None):
    """Population bias matrix of the spectral block estimator.

    Four-term expression in ``M``, ``nu``, ``Delta`` and ``I_pq``; the result
    is symmetrized to remove rounding asymmetry. Zero whenever ``B`` has
    full rank.
    """
    B, pi = _check(B, pi)
    S = structure or nu_factorization(B, pi)
    M = _theta_middle(B, pi, regime)
    try:
        Di = np.linalg.inv(S.Delta)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Delta is singular: {exc}") from exc
    X = S.nu @ Di @ S.ipq @ Di @ S.nu.T
    Y = S.nu @ Di @ S.nu.T
    Pi = np.diag(pi)
    T = M @ X + X @ M - Y @ Pi @ M @ X - X @ M @ Pi @ Y
    return (T + T.T) / 2


def _sandwich(B, pi, regime, middle):
    K = pi.size
    L = elimination_matrix(K)
    Dk = duplication_matrix(K)
    Dinv = np.diag(1.0 / np.diag(dmatrix(B, pi, regime)))
    out = L @ middle @ Dk @ Dinv @ Dk.T @ middle.T @ L.T
    return (out + out.T) / 2


def gamma_tilde(B, pi, regime, structure: SpectralStructure | None = None):
    """Limit covariance of ``vech(Bhat_S)``; equals ``D^{-1}`` at full rank."""
    B, pi = _check(B, pi)
    S = structure or nu_factorization(B, pi)
    P = np.kron(S.proj_perp, S.proj_perp)
    return _sandwich(B, pi, regime, np.eye(P.shape[0]) - P)


def gamma(B, pi, regime, structure: SpectralStructure | None = None):
    """Limit covariance of ``vech(Bhat_S - Bhat_L)``; zero at full rank."""
    B, pi = _check(B, pi)
    S = structure or nu_factorization(B, pi)
    return _sandwich(B, pi, regime, np.kron(S.proj_perp, S.proj_perp))


def moments(variant, B, pi, regime, structure: SpectralStructure | None = None):
    """Asymptotic ``(bias, variance)`` of the scaled statistic for one variant.

    ``bias`` is the coefficient of ``rho^{-1/2}``: 0 for ``L``,
    ``+pt' vech(Theta)`` for ``S`` and ``-pt' vech(Theta)`` for ``R``.
    ``R`` requires a strictly rank-deficient ``B``.
    """
    B, pi = _check(B, pi)
    regime = Regime.parse(regime)
    variant = str(variant).upper()
    pt = pitilde(pi)
    if variant == "L":
        Dinv = 1.0 / np.diag(dmatrix(B, pi, regime))
        return AsymptoticMoments(0.0, float(pt @ (Dinv * pt)), "L", regime)
    S = structure or nu_factorization(B, pi)
    if variant == "S":
        b = float(pt @ vech(theta(B, pi, regime, S)))
        v = float(pt @ gamma_tilde(B, pi, regime, S) @ pt)
        return AsymptoticMoments(b, max(v, 0.0), "S", regime)
    if variant == "R":
        if S.rank >= pi.size:
            raise TheoremInapplicableError(
                f"residual modularity limit needs rank(B) < K; got rank {S.rank} = K"
            )
        b = -float(pt @ vech(theta(B, pi, regime, S)))
        v = float(pt @ gamma(B, pi, regime, S) @ pt)
        return AsymptoticMoments(b, max(v, 0.0), "R", regime)
    raise DomainError(f"unknown variant {variant!r}; use 'L', 'S' or 'R'")


def all_moments(B, pi, regime, variants=("L", "S", "R")):
    """Moments for each requested variant; ``None`` where ``R`` is inapplicable."""
    S = nu_factorization(B, pi)
    out = {}
    for v in variants:
        try:
            out[v] = moments(v, B, pi, regime, S)
        except TheoremInapplicableError:
            out[v] = None
    return out


def rank_one_family(p, q):
    """``B = [p, q]^T [p, q]``."""
    v = np.array([p, q], dtype=float)
    return np.outer(v, v)


def geometric_family(p):
    """``B = [p, p^2]^T [p, p^2]``."""
    v = np.array([p, p * p], dtype=float)
    return np.outer(v, v)


SURFACE_COLUMNS = ("family", "param1", "param2", "bias", "varL", "varS", "varR", "note")

_DEFAULT_GRID = np.round(np.linspace(0.1, 0.9, 81), 10)


def parameter_surface(family, grid=None, regime="dense", *, pi=(0.25, 0.75), rho=1.0):
    """Evaluate bias and the three variances over a two-parameter grid.

    ``family`` is ``"rank_one"`` (grid over ``(p, q)`` with fixed ``pi``) or
    ``"geometric"`` (grid over ``(p, pi_1)``). ``grid`` is an iterable of
    parameter pairs, defaulting to the product of ``0.10, 0.11, ..., 0.90``
    with itself. Points where ``rho * B`` leaves ``(0, 1)`` produce a row of
    NaNs with an explanatory note.
    """
    if grid is None:
        grid = [(a, b) for a in _DEFAULT_GRID for b in _DEFAULT_GRID]
    if family not in ("rank_one", "geometric"):
        raise DomainError(f"unknown family {family!r}; use 'rank_one' or 'geometric'")
    rows = []
    skipped = 0
    for a, b in grid:
        if family == "rank_one":
            B, pvec = rank_one_family(a, b), np.asarray(pi, dtype=float)
        else:
            B, pvec = geometric_family(a), np.array([b, 1 - b])
        row = {"family": family, "param1": float(a), "param2": float(b)}
        if np.any(rho * B <= 0) or np.any(rho * B >= 1) or np.any(pvec <= 0):
            skipped += 1
            row.update(bias=np.nan, varL=np.nan, varS=np.nan, varR=np.nan,
                       note="skipped: parameters outside the valid domain")
            rows.append(row)
            continue
        m = all_moments(B, pvec, regime)
        row.update(
            bias=m["S"].bias,
            varL=m["L"].variance,
            varS=m["S"].variance,
            varR=m["R"].variance if m["R"] is not None else np.nan,
            note="",
        )
        rows.append(row)
    if skipped:
        warnings.warn(f"{skipped} grid point(s) outside the valid domain were skipped")
    return rows
