"""Matrix and label file I/O, correlation-network preprocessing, and a
synthetic brain-parcellation fixture with its modularity-parameter table."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .asymptotics import all_moments, truncate_connectivity
from .errors import DimensionError, DomainError, ParseError
from .models import make_rng

__all__ = [
    "WeightedMatrix",
    "SYMMETRY_TOL",
    "load_matrix",
    "save_matrix",
    "load_labels",
    "save_labels",
    "threshold_binarize",
    "fisher_transform",
    "knn_graph",
    "degree_report",
    "PARCELLATION_SIZES",
    "COARSE_GROUPS",
    "coarsen_labels",
    "parcellation_labels",
    "synthetic_correlations",
    "block_means_offdiag",
    "PARAMETER_TABLE_COLUMNS",
    "parameter_table",
    "format_parameter_table",
]

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class WeightedMatrix:
    values: np.ndarray
    diagonal: str = "kept"  # "kept" | "zeroed"

    @property
    def order(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def _check_symmetric(W):
    bad = np.argwhere(np.abs(W - W.T) > SYMMETRY_TOL)
    if bad.size:
        i, j = sorted(bad.tolist())[0]
        raise ParseError(
            f"matrix is not symmetric at ({i + 1}, {j + 1}): {W[i, j]!r} vs {W[j, i]!r}"
        )


def _read_dense_csv(text):
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        tokens = [t.strip() for t in line.split(",")]
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            bad = next(t for t in tokens if not _is_float(t))
            raise ParseError(f"non-numeric token {bad!r}", lineno) from None
        if len(rows[-1]) != len(rows[0]):
            raise ParseError(f"ragged row: {len(rows[-1])} fields, expected {len(rows[0])}", lineno)
    if not rows:
        raise ParseError("empty matrix file")
    W = np.array(rows)
    if W.shape[0] != W.shape[1]:
        raise ParseError(f"matrix is {W.shape[0]}x{W.shape[1]}, not square")
    return W


def _is_float(t):
    try:
        float(t)
        return True
    except ValueError:
        return False


def _read_edge_list(text):
    lines = [(k, ln.split()) for k, ln in enumerate(text.splitlines(), 1)]
    lines = [(k, t) for k, t in lines if t and not t[0].startswith("#")]
    if not lines:
        raise ParseError("empty edge list")
    k0, head = lines[0]
    if len(head) != 1 or not head[0].isdigit():
        raise ParseError("edge list must start with the node count n", k0)
    n = int(head[0])
    W = np.zeros((n, n))
    for lineno, tok in lines[1:]:
        if len(tok) not in (2, 3):
            raise ParseError(f"expected 'i j [w]', got {len(tok)} fields", lineno)
        try:
            i, j = int(tok[0]), int(tok[1])
            w = float(tok[2]) if len(tok) == 3 else 1.0
        except ValueError:
            raise ParseError(f"non-numeric token in {' '.join(tok)!r}", lineno) from None
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"node index out of range 1..{n}", lineno)
        W[i - 1, j - 1] = W[j - 1, i - 1] = w
    return W


def load_matrix(path, fmt="dense-csv", *, zero_diagonal=False):
    """Read a symmetric weighted matrix from ``dense-csv`` or ``edge-list``.

    Edge lists hold the node count on the first line, then ``i j [w]`` with
    1-based indices; each line assigns both ``(i, j)`` and ``(j, i)``.
    """
    text = Path(path).read_text()
    if fmt == "dense-csv":
        W = _read_dense_csv(text)
        _check_symmetric(W)
    elif fmt == "edge-list":
        W = _read_edge_list(text)
    else:
        raise ParseError(f"unknown matrix format {fmt!r}")
    if zero_diagonal:
        np.fill_diagonal(W, 0.0)
    return WeightedMatrix(W, "zeroed" if zero_diagonal else "kept")


def save_matrix(path, W):
    """Write a dense CSV at 12 significant digits."""
    W = np.asarray(W, dtype=float)
    with open(path, "w") as fh:
        for row in W:
            fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def load_labels(path):
    """One label per line (or first CSV field); returns 0-based codes and the names."""
    names = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        field = line.split(",")[0].strip()
        if field and not field.startswith("#"):
            names.append(field)
    if not names:
        raise ParseError("label file is empty")
    uniq, codes = np.unique(np.array(names), return_inverse=True)
    if all(_is_int(u) for u in uniq):
        order = np.argsort([int(u) for u in uniq])
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return rank[codes], [uniq[i] for i in order]
    return codes, list(uniq)


def _is_int(s):
    try:
        int(s)
        return True
    except ValueError:
        return False


def save_labels(path, labels):
    with open(path, "w") as fh:
        fh.writelines(f"{int(x)}\n" for x in labels)


def threshold_binarize(W, t, *, percentile=False):
    """``A_ij = 1`` iff ``|W_ij| >= t`` and ``i != j``.

    With ``percentile`` the threshold is the ``t``-th percentile (0..100) of
    the off-diagonal absolute weights.
    """
    W = np.abs(np.asarray(W, dtype=float))
    if t < 0:
        raise DomainError(f"threshold must be non-negative, got {t}")
    if percentile:
        if t > 100:
            raise DomainError(f"percentile must lie in [0, 100], got {t}")
        iu = np.triu_indices(W.shape[0], 1)
        t = float(np.percentile(W[iu], t))
    A = (W >= t).astype(float)
    np.fill_diagonal(A, 0.0)
    return A


def fisher_transform(W):
    """Entrywise ``atanh`` with the diagonal zeroed."""
    W = np.array(W, dtype=float)
    np.fill_diagonal(W, 0.0)
    bad = np.argwhere(np.abs(W) >= 1)
    if bad.size:
        i, j = bad[0]
        raise DomainError(f"|W[{i + 1}, {j + 1}]| = {abs(W[i, j])} >= 1; atanh undefined")
    return np.arctanh(W)


def knn_graph(W, k):
    """Union-symmetrized k-nearest-neighbour graph on the largest weights.

    Ties are broken in favour of the lower node index.
    """
    W = np.array(W, dtype=float)
    n = W.shape[0]
    if not 1 <= k < n:
        raise DomainError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    np.fill_diagonal(W, -np.inf)
    nbrs = np.argsort(-W, axis=1, kind="stable")[:, :k]
    A = np.zeros((n, n))
    A[np.repeat(np.arange(n), k), nbrs.ravel()] = 1.0
    A = np.maximum(A, A.T)
    np.fill_diagonal(A, 0.0)
    return A


def degree_report(A):
    deg = np.asarray(A).sum(1)
    return {"min": float(deg.min()), "max": float(deg.max()), "mean": float(deg.mean())}


# Node counts of the 14 systems of a 263-region functional atlas; the last
# ("uncertain") system holds 27 nodes so that the counts sum to 263.
PARCELLATION_SIZES = (30, 5, 14, 13, 58, 5, 31, 25, 18, 13, 9, 11, 4, 27)
COARSE_GROUPS = ((1, 2, 3, 4), (5, 6, 8, 9), (7, 12), (10, 11, 13), (14,))


def parcellation_labels(sizes=PARCELLATION_SIZES):
    return np.repeat(np.arange(len(sizes)), sizes)


def coarsen_labels(labels, groups=COARSE_GROUPS):
    """Map 0-based fine labels onto groups given as 1-based system numbers."""
    lookup = {}
    for g, members in enumerate(groups):
        for m in members:
            lookup[m - 1] = g
    labels = np.asarray(labels)
    missing = set(np.unique(labels).tolist()) - set(lookup)
    if missing:
        raise DimensionError(f"labels {sorted(missing)} are not covered by the grouping")
    return np.array([lookup[x] for x in labels])


def synthetic_correlations(
    n_subjects,
    seed=0,
    *,
    sizes=PARCELLATION_SIZES,
    groups=COARSE_GROUPS,
    super_groups=(0, 0, 1, 1, 2),
    loading=0.67,
    coarse_corr=0.85,
    super_corr=0.8,
    base_corr=0.5,
    timepoints=100,
):
    """Sample correlation matrices from a hierarchical block factor model.

    Each system has a latent factor. Factors correlate ``coarse_corr``
    within a coarse group, ``super_corr`` across coarse groups sharing a
    super-group, and ``base_corr`` otherwise, which leaves the coarse block
    matrix with two eigenvalues well below the leading three. A node's
    signal is ``loading * factor + noise`` with unit variance, and each
    subject's matrix is the sample correlation over ``timepoints`` draws.
    """
    K = len(sizes)
    coarse = coarsen_labels(np.arange(K), groups)
    sup = np.asarray(super_groups)[coarse]
    C = np.where(sup[:, None] == sup[None, :], super_corr, base_corr)
    C = np.where(coarse[:, None] == coarse[None, :], coarse_corr, C)
    np.fill_diagonal(C, 1.0)
    L = np.linalg.cholesky(C)
    tau = parcellation_labels(sizes)
    rng = make_rng(seed)
    noise_sd = math.sqrt(1 - loading**2)
    out = []
    for _ in range(n_subjects):
        F = rng.standard_normal((timepoints, K)) @ L.T
        X = loading * F[:, tau] + noise_sd * rng.standard_normal((timepoints, tau.size))
        out.append(np.corrcoef(X, rowvar=False))
    return out


def block_means_offdiag(A, tau, K=None):
    """Block averages of ``A`` over node pairs ``i != j``."""
    A = np.asarray(A, dtype=float)
    tau = np.asarray(tau)
    K = int(tau.max()) + 1 if K is None else K
    Z = np.zeros((tau.size, K))
    Z[np.arange(tau.size), tau] = 1.0
    counts = Z.sum(0)
    S = Z.T @ (A - np.diag(np.diag(A))) @ Z
    pairs = np.outer(counts, counts) - np.diag(counts)
    if np.any(pairs <= 0):
        raise DomainError("every block needs at least two nodes")
    return S / pairs, counts / counts.sum()


PARAMETER_TABLE_COLUMNS = ("Type", "K", "d", "Bias", "sigmaL2", "sigmaS2", "sigmaR2")

_DEFAULT_SETTINGS = (("fine", None), ("coarse", None), ("coarse", 4), ("coarse", 3))


def parameter_table(groups, tau, *, settings=_DEFAULT_SETTINGS, coarse=COARSE_GROUPS,
                    threshold=0.3, regime="dense", clip=1e-4):
    """Plug-in modularity parameters per population and partition setting.

    ``groups`` maps a population name to its list of correlation matrices.
    Each matrix is binarized at ``threshold``; the population mean adjacency
    gives block estimates ``Bhat`` (pairs ``i != j``), which are truncated to
    rank ``d`` (``None`` means ``d = K``) before the asymptotic formulas are
    evaluated. The residual variance is ``None`` when ``d = K``.
    """
    tau = np.asarray(tau)
    rows = []
    for name, mats in groups.items():
        Abar = np.mean([threshold_binarize(W, threshold) for W in mats], axis=0)
        for level, d in settings:
            labels = tau if level == "fine" else coarsen_labels(tau, coarse)
            Bhat, pi = block_means_offdiag(Abar, labels)
            K = pi.size
            d = K if d is None else int(d)
            B = Bhat if d == K else truncate_connectivity(Bhat, d)
            if np.any(B < clip) or np.any(B > 1 - clip):
                warnings.warn(f"{name}, K={K}, d={d}: block estimates clipped to [{clip}, {1 - clip}]")
                B = np.clip(B, clip, 1 - clip)
            m = all_moments(B, pi, regime)
            rows.append({
                "Type": name,
                "K": K,
                "d": d,
                "Bias": m["S"].bias,
                "sigmaL2": m["L"].variance,
                "sigmaS2": m["S"].variance,
                "sigmaR2": None if d == K else (m["R"].variance if m["R"] is not None else None),
            })
    return rows


def format_parameter_table(rows, digits=3):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PARAMETER_TABLE_COLUMNS)
    for r in rows:
        out = []
        for c in PARAMETER_TABLE_COLUMNS:
            v = r[c]
            if v is None:
                out.append("NA")
            elif isinstance(v, float):
                txt = f"{v:.{digits}f}"
                out.append(txt[1:] if txt.startswith("-") and float(txt) == 0 else txt)
            else:
                out.append(str(v))
        w.writerow(out)
    return buf.getvalue()
