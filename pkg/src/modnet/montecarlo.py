"""Replication engine for the simulation studies.

Replicate ``r`` at network size ``n`` draws every random quantity from
``SeedSequence([master, n, r])``, so results do not depend on execution
order or on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .asymptotics import Regime, all_moments, nu_factorization, parameter_surface
from .embedding import adjusted_rand_index, align_labels, estimate_rank, kmeans, relabel, spectral_embed
from .errors import ConfigError, DomainError
from .inference import PowerSpec, ks_distance_normal, normal_quantile, t_statistic_L, t_statistic_S
from .linalg import top_eigenpairs
from .modularity import block_estimator_likelihood, louvain, modularity_triplet, q_likelihood, q_newman_girvan, q_spectral
from .models import (
    SbmParams,
    derive_seed,
    hardy_weinberg_positions,
    sample_grdpg,
    sample_memberships,
    sample_sbm,
)

__all__ = [
    "ExperimentConfig",
    "ReplicateRecord",
    "SummaryRow",
    "EXAMPLES",
    "example_config",
    "rho_for",
    "run_replicate",
    "run_experiment",
    "summarize",
    "theory_for",
    "summary_csv",
    "records_json",
    "empirical_power",
    "power_family",
    "contour_sweep",
    "grdpg_study",
]


def rho_for(rule, n):
    """Sparsity factor for network size ``n`` under a symbolic or numeric rule."""
    if rule in (None, "dense", 1, 1.0):
        return 1.0
    if isinstance(rule, str):
        if rule.replace(" ", "") in ("n^-1/4", "n^(-1/4)", "n**-0.25"):
            return float(n) ** -0.25
        try:
            return float(rule)
        except ValueError:
            raise ConfigError(f"unknown sparsity rule {rule!r}") from None
    return float(rule)


@dataclass
class ExperimentConfig:
    B: list
    pi: list
    n_values: list
    replicates: int = 1000
    rho_rule: object = "dense"
    regime: str = "dense"
    variants: tuple = ("L", "S", "R")
    d_rule: str = "true"  # "true" | "estimated"
    d_max: int | None = None
    clustering: str = "oracle"  # "oracle" | "spectral"
    spectral_ari: bool = False
    louvain: bool = False
    seed: int = 0
    loops: bool = True
    name: str = "experiment"

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        self.variants = tuple(v.upper() for v in self.variants)
        self.n_values = [int(n) for n in self.n_values]
        self.validate()

    def validate(self):
        K = self.pi.size
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if not self.n_values:
            raise ConfigError("n_values must not be empty")
        for n in self.n_values:
            if n < 5 * K:
                raise ConfigError(f"n = {n} is below 5K = {5 * K}")
        if self.d_rule not in ("true", "estimated"):
            raise ConfigError(f"d_rule must be 'true' or 'estimated', got {self.d_rule!r}")
        if self.clustering not in ("oracle", "spectral"):
            raise ConfigError(f"clustering must be 'oracle' or 'spectral', got {self.clustering!r}")
        bad = set(self.variants) - {"L", "S", "R"}
        if bad:
            raise ConfigError(f"unknown variants {sorted(bad)}")
        try:
            Regime.parse(self.regime)
            for n in self.n_values:
                self.params(n)
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def K(self) -> int:
        return self.pi.size

    def params(self, n):
        return SbmParams(self.B, self.pi, rho_for(self.rho_rule, n))

    @property
    def true_rank(self) -> int:
        return nu_factorization(self.B, self.pi).rank

    def to_dict(self):
        out = asdict(self)
        out["B"] = self.B.tolist()
        out["pi"] = self.pi.tolist()
        out["variants"] = list(self.variants)
        return out


_B1 = [[0.85, 0.50, 0.25], [0.50, 0.85, 0.50], [0.25, 0.50, 0.85]]
_B2 = [[0.30, 0.75], [0.75, 0.40]]
_B3 = np.outer([0.75, 0.25], [0.75, 0.25]).tolist()
_B4 = np.outer([0.75, 0.75**2, 0.75**3], [0.75, 0.75**2, 0.75**3]).tolist()
_THIRDS = [1 / 3, 1 / 3, 1 / 3]

EXAMPLES = {
    "eg1_dense": dict(B=_B1, pi=_THIRDS, n_values=[300, 600, 1800, 6000], rho_rule="dense", regime="dense", variants=("L", "S")),
    "eg1_sparse": dict(B=_B1, pi=_THIRDS, n_values=[300, 600, 1800, 6000], rho_rule="n^-1/4", regime="sparse", variants=("L", "S")),
    "eg2_dense": dict(B=_B2, pi=[0.5, 0.5], n_values=[400, 800, 1000, 4000], rho_rule="dense", regime="dense", variants=("L", "S")),
    "eg3_sparse": dict(B=_B3, pi=[0.25, 0.75], n_values=[200, 400, 800, 1000], rho_rule="n^-1/4", regime="sparse"),
    "eg3_dense": dict(B=_B3, pi=[0.25, 0.75], n_values=[200, 400, 800, 1000], rho_rule="dense", regime="dense"),
    "eg4_dense": dict(B=_B4, pi=_THIRDS, n_values=[300, 600, 1200, 1800], rho_rule="dense", regime="dense"),
}


def example_config(name, **overrides):
    """Preset configuration for one of the worked simulation examples."""
    if name not in EXAMPLES:
        raise ConfigError(f"unknown example {name!r}; choose from {sorted(EXAMPLES)}")
    kw = dict(EXAMPLES[name])
    kw["name"] = name
    kw.update(overrides)
    return ExperimentConfig(**kw)


@dataclass
class ReplicateRecord:
    n: int
    replicate: int
    rho: float
    QL: float | None = None
    QS: float | None = None
    QR: float | None = None
    d_hat: int | None = None
    ari_spectral: float | None = None
    louvain_k: int | None = None
    louvain_ari: float | None = None

    def value(self, variant):
        return getattr(self, "Q" + variant)


def _spectral_labels(E, d, K, tau, seed):
    coords = E.vectors[:, :d] * np.sqrt(np.abs(E.values[:d]))
    res = kmeans(coords, K, restarts=10, seed=seed)
    perm, _ = align_labels(res.labels, tau)
    return relabel(res.labels, perm)


def run_replicate(cfg: ExperimentConfig, n, r):
    """One simulated network and its statistics."""
    s_tau, s_graph, s_cluster, s_louvain = derive_seed(cfg.seed, n, r).spawn(4)
    params = cfg.params(n)
    tau = sample_memberships(cfg.pi, n, s_tau)
    A = sample_sbm(params, tau, s_graph, loops=cfg.loops)
    d_true = cfg.true_rank
    d_max = cfg.d_max or cfg.K
    m = max(d_true, d_max + 1 if cfg.d_rule == "estimated" else 0)
    E = top_eigenpairs(A, min(m, n))
    d_hat = estimate_rank(E.values, min(d_max, len(E) - 1)) if len(E) > 1 else 1
    d = d_true if cfg.d_rule == "true" else d_hat
    rec = ReplicateRecord(n=n, replicate=r, rho=params.rho, d_hat=int(d_hat))

    labels = tau
    need_spectral = cfg.clustering == "spectral" or cfg.spectral_ari
    if need_spectral:
        est = _spectral_labels(E, d, cfg.K, tau, s_cluster)
        rec.ari_spectral = adjusted_rand_index(est, tau)
        if cfg.clustering == "spectral":
            labels = est
    ql, qs, qr = modularity_triplet(A, d, params, labels, E)
    if "L" in cfg.variants:
        rec.QL = ql.scaled
    if "S" in cfg.variants:
        rec.QS = qs.scaled
    if "R" in cfg.variants:
        rec.QR = qr.scaled
    if cfg.louvain:
        lv = louvain(A, s_louvain)
        rec.louvain_k = lv.n_communities
        rec.louvain_ari = adjusted_rand_index(lv.labels, tau)
    return rec


def _run_chunk(args):
    cfg, tasks = args
    return [run_replicate(cfg, n, r) for n, r in tasks]


def run_experiment(cfg: ExperimentConfig, workers=1, progress=None):
    """All replicates for every configured ``n``, ordered by ``(n, replicate)``."""
    cfg.validate()
    tasks = [(n, r) for n in cfg.n_values for r in range(cfg.replicates)]
    if workers <= 1 or len(tasks) <= 1:
        out = []
        for i, (n, r) in enumerate(tasks):
            out.append(run_replicate(cfg, n, r))
            if progress:
                progress(i + 1, len(tasks))
        return out
    size = max(1, math.ceil(len(tasks) / (workers * 8)))
    chunks = [(cfg, tasks[i : i + size]) for i in range(0, len(tasks), size)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, chunks):
            out.extend(part)
            if progress:
                progress(len(out), len(tasks))
    return out


@dataclass
class SummaryRow:
    n: int
    variant: str
    replicates: int
    rho: float
    emp_bias: float
    emp_var: float
    theory_bias: float
    theory_var: float
    ks_distance: float


SUMMARY_COLUMNS = [f.name for f in SummaryRow.__dataclass_fields__.values()]


def summarize(records, theory):
    """Empirical versus theoretical moments per ``(n, variant)``.

    ``theory`` maps a variant to its :class:`AsymptoticMoments` (or ``None``).
    The KS distance compares replicates standardized by the theory moments
    with N(0, 1), so it tests the limit law itself rather than normality.
    """
    rows = []
    by_n = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(rec)
    for n in sorted(by_n):
        recs = by_n[n]
        rho = recs[0].rho
        for variant in ("L", "S", "R"):
            vals = np.array([r.value(variant) for r in recs if r.value(variant) is not None], dtype=float)
            if vals.size == 0:
                continue
            mom = theory.get(variant) if theory else None
            tb = mom.mean(rho) if mom is not None else np.nan
            tv = mom.variance if mom is not None else np.nan
            ks = np.nan
            if mom is not None and tv > 0:
                ks = ks_distance_normal((vals - tb) / np.sqrt(tv))
            rows.append(SummaryRow(
                n=n, variant=variant, replicates=int(vals.size), rho=rho,
                emp_bias=float(vals.mean()),
                emp_var=float(vals.var(ddof=1)) if vals.size > 1 else 0.0,
                theory_bias=float(tb), theory_var=float(tv), ks_distance=float(ks),
            ))
    return rows


def theory_for(cfg: ExperimentConfig):
    return all_moments(cfg.B, cfg.pi, cfg.regime, cfg.variants)


def summary_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "NA" if not np.isfinite(x) else f"{x:.10g}"
    return str(x)


def records_json(records):
    return [asdict(r) for r in records]


def power_family(eps, v=(0.75, 0.25), pi=(0.25, 0.75)):
    """Null ``v v^T`` and alternative with the first coordinate shifted by ``eps``."""
    v = np.asarray(v, dtype=float)
    u = v.copy()
    u[0] += eps
    return np.outer(v, v), np.outer(u, u), np.asarray(pi, dtype=float)


def _power_replicate(spec, regime, r, seed, plug_in, z):
    s_tau, s_graph = derive_seed(seed, spec.n, r).spawn(2)
    alt = SbmParams(spec.B1, spec.pi, spec.rho)
    null = SbmParams(spec.B0, spec.pi, spec.rho)
    tau = sample_memberships(spec.pi, spec.n, s_tau)
    A = sample_sbm(alt, tau, s_graph)
    d = nu_factorization(spec.B0, spec.pi).rank
    E = top_eigenpairs(A, d)
    ql = q_likelihood(A, null, tau).scaled
    qs = q_spectral(A, d, null, tau, E).scaled
    B_var = spec.B0
    if plug_in:
        Bhat = block_estimator_likelihood(A, tau, spec.rho, spec.pi.size).Bhat
        w, V = np.linalg.eigh(Bhat)
        o = np.argsort(-np.abs(w))[:d]
        B_var = np.clip((V[:, o] * w[o]) @ V[:, o].T, 1e-6, 1 - 1e-6)
        B_var = (B_var + B_var.T) / 2
    if plug_in:
        tl = ql / np.sqrt(all_moments(B_var, spec.pi, regime, ("L",))["L"].variance)
        mS = all_moments(B_var, spec.pi, regime, ("S",))["S"]
        # centre at the null bias, scale by the plug-in spread
        m0 = all_moments(spec.B0, spec.pi, regime, ("S",))["S"]
        ts = (qs - m0.bias / np.sqrt(spec.rho)) / np.sqrt(mS.variance)
    else:
        tl = t_statistic_L(ql, spec.B0, spec.pi, regime)
        ts = t_statistic_S(qs, spec.B0, spec.pi, spec.rho, regime)
    return abs(tl) > z, abs(ts) > z


def empirical_power(spec: PowerSpec, replicates=1000, seed=0, plug_in=False, regime="dense"):
    """Rejection rates of ``T_L`` and ``T_S`` for graphs simulated under ``B1``.

    With ``plug_in`` the null variances are evaluated at the rank-matched
    likelihood block estimate of each graph instead of at ``B0``.
    """
    if replicates < 1:
        raise ConfigError("replicates must be positive")
    z = normal_quantile(1 - spec.alpha / 2)
    hits = np.array(
        [_power_replicate(spec, regime, r, seed, plug_in, z) for r in range(replicates)]
    )
    return float(hits[:, 0].mean()), float(hits[:, 1].mean())


def contour_sweep(family, grid=None, regime="dense", **kw):
    """Surface rows from :func:`parameter_surface` plus grid metadata."""
    rows = parameter_surface(family, grid, regime, **kw)
    p1 = sorted({r["param1"] for r in rows})
    p2 = sorted({r["param2"] for r in rows})
    meta = {
        "family": family,
        "regime": Regime.parse(regime).value,
        "param1_range": [p1[0], p1[-1]] if p1 else [],
        "param2_range": [p2[0], p2[-1]] if p2 else [],
        "points": len(rows),
    }
    if family == "rank_one":
        meta["pi"] = list(kw.get("pi", (0.25, 0.75)))
    return rows, meta


GRDPG_MIXTURES = {
    "mild": (0.6, (1.2, 5.5), (8.0, 1.2)),
    "moderate": (0.6, (3.0, 8.0), (8.0, 3.0)),
}


def _grdpg_replicate(mix, n, r, seed, d):
    weight, b1, b2 = mix
    s_lat, s_graph, s_k1, s_k2, s_lv = derive_seed(seed, n, r).spawn(5)
    latent, oracle = hardy_weinberg_positions(weight, b1, b2, n, s_lat)
    A = sample_grdpg(latent, s_graph)
    out = {}
    km_x = kmeans(latent.X, 2, restarts=10, seed=s_k1).labels
    emb = spectral_embed(A, d)
    km_xhat = kmeans(emb.coords, 2, restarts=10, seed=s_k2).labels
    lv = louvain(A, s_lv)
    for name, labels in (("oracle", oracle), ("kmeans_X", km_x), ("kmeans_Xhat", km_xhat), ("louvain", lv.labels)):
        out[name] = (adjusted_rand_index(labels, oracle), q_newman_girvan(A, labels).normalized)
    return out


def grdpg_study(mix, n, replicates, seed=0, d=3):
    """ARI and normalized Newman-Girvan modularity per clusterer.

    ``mix`` is ``(weight, (a1, b1), (a2, b2))`` or a key of ``GRDPG_MIXTURES``.
    Returns one summary row per clusterer; empty when ``replicates == 0``.
    """
    if isinstance(mix, str):
        mix = GRDPG_MIXTURES[mix]
    per = [_grdpg_replicate(mix, n, r, seed, d) for r in range(replicates)]
    if not per:
        return []
    rows = []
    for name in per[0]:
        ari = np.array([p[name][0] for p in per])
        q = np.array([p[name][1] for p in per])
        rows.append({
            "clusterer": name,
            "replicates": len(per),
            "ari_median": float(np.median(ari)),
            "ari_mean": float(ari.mean()),
            "ari_q25": float(np.quantile(ari, 0.25)),
            "ari_q75": float(np.quantile(ari, 0.75)),
            "qng_median": float(np.median(q)),
            "qng_mean": float(q.mean()),
        })
    return rows
