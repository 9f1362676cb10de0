"""Command-line interface: ``modnet <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 data or configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .asymptotics import SURFACE_COLUMNS, nu_factorization
from .dataio import (
    degree_report,
    fisher_transform,
    format_parameter_table,
    knn_graph,
    load_labels,
    load_matrix,
    parameter_table,
    parcellation_labels,
    save_labels,
    save_matrix,
    synthetic_correlations,
    threshold_binarize,
)
from .embedding import adjusted_rand_index, align_labels, estimate_rank, gmm_em, kmeans, relabel, spectral_embed
from .errors import ConfigError, ModnetError, NumericalError
from .inference import PowerSpec, analytic_power_L, analytic_power_S, modularity_test
from .linalg import top_eigenpairs
from .modularity import block_estimator_likelihood, modularity_triplet, q_newman_girvan
from .models import SbmParams
from .montecarlo import (
    EXAMPLES,
    ExperimentConfig,
    contour_sweep,
    empirical_power,
    example_config,
    grdpg_study,
    power_family,
    records_json,
    run_experiment,
    summarize,
    summary_csv,
    theory_for,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}, "minItems": 1}

SIMULATE_SCHEMA = {
    "type": "object",
    "properties": {
        "example": {"enum": sorted(EXAMPLES)},
        "B": _MATRIX,
        "pi": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "n_values": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "replicates": {"type": "integer", "minimum": 1},
        "rho_rule": {"type": ["string", "number"]},
        "regime": {"enum": ["dense", "sparse"]},
        "variants": {"type": "array", "items": {"enum": ["L", "S", "R"]}, "minItems": 1},
        "d_rule": {"enum": ["true", "estimated"]},
        "d_max": {"type": "integer", "minimum": 1},
        "clustering": {"enum": ["oracle", "spectral"]},
        "spectral_ari": {"type": "boolean"},
        "louvain": {"type": "boolean"},
        "seed": {"type": "integer", "minimum": 0},
        "loops": {"type": "boolean"},
        "name": {"type": "string"},
        "out": {"type": "string"},
    },
    "additionalProperties": False,
    "anyOf": [{"required": ["example"]}, {"required": ["B", "pi", "n_values"]}],
}

class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _threads(args):
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("MODNET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"MODNET_THREADS must be an integer, got {env!r}") from None
    return 1


def _out_dir(args):
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_config(path, schema):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {loc}: {exc.message}") from None
    return doc


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(x):
    if x is None:
        return "NA"
    if isinstance(x, float):
        return "NA" if not np.isfinite(x) else f"{x:.10g}"
    return str(x)


# ---- subcommands -----------------------------------------------------------

def cmd_simulate(args):
    doc = _load_config(args.config, SIMULATE_SCHEMA) if args.config else {}
    if args.example:
        doc["example"] = args.example
    if not doc:
        raise UsageError("simulate needs --config or --example")
    doc.pop("out", None)
    if args.replicates is not None:
        doc["replicates"] = args.replicates
    if args.n:
        doc["n_values"] = args.n
    if args.seed is not None:
        doc["seed"] = args.seed
    name = doc.pop("example", None)
    cfg = example_config(name, **doc) if name else ExperimentConfig(**doc)
    records = run_experiment(cfg, workers=_threads(args))
    rows = summarize(records, theory_for(cfg))
    out = _out_dir(args)
    (out / "summary.csv").write_text(summary_csv(rows))
    (out / "records.json").write_text(json.dumps(
        {"config": cfg.to_dict(), "records": records_json(records)}, indent=1, sort_keys=True
    ) + "\n")
    sys.stdout.write(summary_csv(rows))
    return EXIT_OK


def cmd_power(args):
    B0, B1, pi = power_family(args.eps)
    spec = PowerSpec(B0, B1, pi, args.rho, args.n, args.alpha)
    aL, aS = analytic_power_L(spec, args.regime), analytic_power_S(spec, args.regime)
    rows = [["analytic", f"{aL:.6g}", f"{aS:.6g}"]]
    if args.replicates > 0:
        eL, eS = empirical_power(spec, args.replicates, args.seed or 0, args.plug_in, args.regime)
        rows.append(["empirical_plug_in" if args.plug_in else "empirical", f"{eL:.6g}", f"{eS:.6g}"])
    for r in rows:
        print(f"{r[0]:>18s}  T_L {r[1]:>9s}  T_S {r[2]:>9s}")
    if args.out:
        _write_csv(_out_dir(args) / "power.csv", ["kind", "power_L", "power_S"], rows)
    return EXIT_OK


def cmd_sweep(args):
    step = args.step
    grid_1d = np.round(np.arange(args.lo, args.hi + step / 2, step), 10)
    grid = [(a, b) for a in grid_1d for b in grid_1d]
    kw = {"pi": tuple(args.pi)} if args.family == "rank_one" else {}
    rows, meta = contour_sweep(args.family, grid, args.regime, **kw)
    path = _out_dir(args) / f"sweep_{args.family}_{meta['regime']}.csv"
    _write_csv(path, SURFACE_COLUMNS, [[_fmt(r[c]) for c in SURFACE_COLUMNS] for r in rows])
    (path.with_suffix(".json")).write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(rows)} rows to {path}")
    return EXIT_OK


def _graph_arg(args):
    return load_matrix(args.input, args.format).values


def cmd_embed(args):
    A = _graph_arg(args)
    d_max = args.d_max
    E = top_eigenpairs(A, max(args.d or 0, d_max + 1))
    d = args.d or estimate_rank(E.values, d_max)
    emb = spectral_embed(A, d, E)
    K = args.K or d
    if args.method == "gmm":
        res = gmm_em(emb.coords, K, seed=args.seed or 0)
    else:
        res = kmeans(emb.coords, K, seed=args.seed or 0)
    labels = res.labels
    print(f"d = {d}, K = {K}")
    if args.labels:
        truth, _ = load_labels(args.labels)
        perm, _ = align_labels(labels, truth)
        labels = relabel(labels, perm)
        print(f"ARI = {adjusted_rand_index(labels, truth):.6f}")
    out = _out_dir(args)
    save_labels(out / "labels.csv", labels)
    np.savetxt(out / "embedding.csv", emb.coords, delimiter=",", fmt="%.12g")
    return EXIT_OK


def _null_params(args, A, tau, K):
    if args.B0:
        B = np.array(json.loads(args.B0), dtype=float)
    else:
        B = block_estimator_likelihood(A, tau, args.rho, K).Bhat
    counts = np.bincount(tau, minlength=K)
    return SbmParams(B, counts / counts.sum(), args.rho)


def cmd_modularity(args):
    A = _graph_arg(args)
    tau, _ = load_labels(args.labels)
    K = int(tau.max()) + 1
    params = _null_params(args, A, tau, K)
    d = args.d or nu_factorization(params.B, params.pi).rank
    ql, qs, qr = modularity_triplet(A, d, params, tau)
    rows = [[q.variant, _fmt(q.raw), _fmt(q.scaled)] for q in (ql, qs, qr)]
    if A.sum() > 0:
        ng = q_newman_girvan(A, tau)
        rows.append(["NG", _fmt(ng.raw), _fmt(ng.normalized)])
    for r in rows:
        print(",".join(r))
    if args.out:
        _write_csv(_out_dir(args) / "modularity.csv", ["variant", "raw", "scaled"], rows)
    return EXIT_OK


def cmd_test(args):
    A = _graph_arg(args)
    tau, _ = load_labels(args.labels)
    K = int(tau.max()) + 1
    params = _null_params(args, A, tau, K)
    d = nu_factorization(params.B, params.pi).rank
    ql, qs, _ = modularity_triplet(A, d, params, tau)
    rows = []
    for q in (ql, qs):
        res = modularity_test(q.scaled, q.variant, params.B, params.pi, params.rho, args.regime)
        rows.append([res.kind, _fmt(res.statistic), _fmt(res.pvalue)])
        print(f"{res.kind}: statistic {res.statistic:.6f}, p-value {res.pvalue:.6g}")
    if args.out:
        _write_csv(_out_dir(args) / "test.csv", ["test", "statistic", "pvalue"], rows)
    return EXIT_OK


def cmd_preprocess(args):
    W = _graph_arg(args)
    if args.op == "threshold":
        out = threshold_binarize(W, args.t, percentile=args.percentile)
    elif args.op == "fisher":
        out = fisher_transform(W)
    else:
        out = knn_graph(W, args.k)
    if args.op != "fisher":
        rep = degree_report(out)
        print(f"degrees: min {rep['min']:g}, max {rep['max']:g}, mean {rep['mean']:.4g}")
    path = _out_dir(args) / f"{args.op}.csv"
    save_matrix(path, out)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_grdpg(args):
    rows = grdpg_study(args.mixture, args.n, args.replicates, args.seed or 0, args.d)
    header = ["clusterer", "replicates", "ari_median", "ari_mean", "ari_q25", "ari_q75", "qng_median", "qng_mean"]
    table = [[_fmt(r[c]) for c in header] for r in rows]
    print(",".join(header))
    for r in table:
        print(",".join(r))
    if args.out:
        _write_csv(_out_dir(args) / f"grdpg_{args.mixture}.csv", header, table)
    return EXIT_OK


def cmd_parcellation(args):
    if args.groups:
        tau, _ = load_labels(args.labels)
        groups = {}
        for spec in args.groups:
            name, _, files = spec.partition("=")
            groups[name] = [load_matrix(f).values for f in files.split(",") if f]
    else:
        seed = args.seed or 0
        tau = parcellation_labels()
        groups = {
            "control": synthetic_correlations(args.subjects, seed),
            "case": synthetic_correlations(args.subjects, seed + 1, loading=0.65),
        }
    text = format_parameter_table(parameter_table(groups, tau, threshold=args.t))
    sys.stdout.write(text)
    if args.out:
        (_out_dir(args) / "parameter_table.csv").write_text(text)
    return EXIT_OK


# ---- parser ------------------------------------------------------------------

def _global_flags(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=default, help="master random seed")
    p.add_argument("--threads", type=int, default=default, help="worker processes (fallback: MODNET_THREADS)")
    p.add_argument("--out", default=default, help="output directory")
    p.add_argument("--config", default=default, help="JSON run configuration")


def build_parser():
    parser = _Parser(prog="modnet", description="Modularity statistics for stochastic blockmodels.")
    parser.add_argument("--version", action="version", version=f"modnet {__version__}")
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name, help_, func):
        p = sub.add_parser(name, help=help_, parents=[common], description=help_)
        p.set_defaults(func=func)
        return p

    def graph_input(p):
        p.add_argument("--input", help="adjacency or weight matrix file")
        p.add_argument("--format", choices=["dense-csv", "edge-list"], default="dense-csv")

    p = add("simulate", "Monte Carlo replication of a blockmodel experiment", cmd_simulate)
    p.add_argument("--example", choices=sorted(EXAMPLES))
    p.add_argument("--replicates", type=int)
    p.add_argument("--n", type=int, nargs="+")

    p = add("power", "analytic and empirical power of the modularity tests", cmd_power)
    p.add_argument("--eps", type=float, help="perturbation of the first latent coordinate")
    p.add_argument("--n", type=int)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--regime", choices=["dense", "sparse"], default="dense")
    p.add_argument("--replicates", type=int, default=1000, help="0 skips the simulation")
    p.add_argument("--plug-in", action="store_true", help="evaluate null variances at the block estimate")

    p = add("sweep", "bias and variance surfaces over a parameter grid", cmd_sweep)
    p.add_argument("--family", choices=["rank_one", "geometric"])
    p.add_argument("--regime", choices=["dense", "sparse"], default="dense")
    p.add_argument("--lo", type=float, default=0.1)
    p.add_argument("--hi", type=float, default=0.9)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--pi", type=float, nargs=2, default=[0.25, 0.75])

    p = add("embed", "spectral embedding and clustering of a graph", cmd_embed)
    graph_input(p)
    p.add_argument("--d", type=int, help="embedding dimension (default: eigenvalue ratio estimate)")
    p.add_argument("--d-max", type=int, default=10)
    p.add_argument("--K", type=int, help="number of clusters (default: d)")
    p.add_argument("--method", choices=["kmeans", "gmm"], default="kmeans")
    p.add_argument("--labels", help="reference labels for ARI")

    for name, help_, func in (
        ("modularity", "likelihood, spectral, residual and Newman-Girvan modularity", cmd_modularity),
        ("test", "modularity z-tests of a null connectivity matrix", cmd_test),
    ):
        p = add(name, help_, func)
        graph_input(p)
        p.add_argument("--labels", help="one community label per node")
        p.add_argument("--B0", help="null connectivity as a JSON nested list (default: block estimate)")
        p.add_argument("--rho", type=float, default=1.0)
        if name == "modularity":
            p.add_argument("--d", type=int, help="truncation rank (default: rank of B0)")
        else:
            p.add_argument("--regime", choices=["dense", "sparse"], default="dense")

    p = add("preprocess", "threshold, Fisher-transform or kNN-sparsify a weight matrix", cmd_preprocess)
    graph_input(p)
    p.add_argument("--op", choices=["threshold", "fisher", "knn"])
    p.add_argument("--t", type=float, default=0.3)
    p.add_argument("--percentile", action="store_true", help="read --t as a percentile of |weights|")
    p.add_argument("--k", type=int, default=50)

    p = add("grdpg", "clustering study on a latent-curve random dot product graph", cmd_grdpg)
    p.add_argument("--mixture", choices=["mild", "moderate"], default="mild")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--d", type=int, default=3)

    p = add("parcellation", "plug-in modularity parameters for thresholded correlation networks", cmd_parcellation)
    p.add_argument("--labels", help="atlas labels (required with --group)")
    p.add_argument("--group", dest="groups", action="append",
                   help="NAME=file1.csv,file2.csv; omit to use the synthetic fixture")
    p.add_argument("--subjects", type=int, default=20, help="synthetic subjects per group")
    p.add_argument("--t", type=float, default=0.3)
    return parser


REQUIRED = {
    "power": ("eps", "n"),
    "sweep": ("family",),
    "embed": ("input",),
    "modularity": ("input", "labels"),
    "test": ("input", "labels"),
    "preprocess": ("input", "op"),
}


def _apply_config(parser, args):
    # config values fill every option left at its default on the command line
    sub = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest for a in sub._actions if a.dest not in ("help", "config", "func")}
    schema = {"type": "object", "properties": {d: {} for d in dests}, "additionalProperties": False}
    doc = _load_config(args.config, schema)
    for key, value in doc.items():
        current = getattr(args, key, None)
        if current is None or current == sub.get_default(key):
            setattr(args, key, value)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            print("modnet: error: a command is required", file=sys.stderr)
            return EXIT_USAGE
        if args.config and args.command != "simulate":
            _apply_config(parser, args)
        missing = [f"--{m.replace('_', '-')}" for m in REQUIRED.get(args.command, ()) if getattr(args, m) is None]
        if args.command == "parcellation" and args.groups and not args.labels:
            missing.append("--labels")
        if missing:
            raise UsageError(f"modnet {args.command}: missing required option(s) {', '.join(missing)}")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"modnet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ModnetError, ConfigError, OSError, jsonschema.ValidationError) as exc:
        print(f"modnet: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except np.linalg.LinAlgError as exc:
        print(f"modnet: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
