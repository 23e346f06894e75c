"""Command-line entry point: ``edgesq <subcommand> ...``.

Exit codes: 0 success, 1 a verification failed, 2 usage or input errors.
Every run writes its primary output plus a ``<out>.manifest.json``
recording the resolved flags and wall-clock timings.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .constructions import estimate_doubling_dimension, gen_euclidean_lower_bound, gen_h_tree
from .core import DistanceMatrix, FormatError, MetricParams, PointSet, load_graph, load_points, save_graph, save_points
from .experiments import KnnSpannerTrialConfig, SamplerSpec, knn_one_spanner_trial, probability_bound_trace, sample
from .metrics import power_metric, stretch
from .persistence import intrinsic_cech_edges, write_edges_csv
from .proximity import critical_edges, euclidean_mst, gabriel_graph, knn_graph
from .spanner import SpannerConfig, build_spanner, certify

log = logging.getLogger("edgesq")

DENSE_MAX_N = 600


class VerificationFailed(Exception):
    pass


def _positive(kind):
    def parse(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v

    return parse


def _read_points(path: str) -> PointSet:
    fmt = "json" if path.endswith(".json") else "csv"
    with open(path, "rb") as fh:
        return load_points(fh, fmt)


def _write_points(ps: PointSet, path: str) -> None:
    fmt = "json" if path.endswith(".json") else "csv"
    with open(path, "w", newline="") as fh:
        save_points(ps, fh, fmt)


def _write_json(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _metric(ps: PointSet, params: MetricParams) -> DistanceMatrix:
    method = "dijkstra"
    if ps.n > DENSE_MAX_N and not params.normalized and params.p >= 2:
        method = "gabriel"
    return power_metric(ps, params, method=method)


# --------------------------------------------------------------------------
# subcommands; each returns (outputs written, exit code)
# --------------------------------------------------------------------------


def cmd_gen(a) -> tuple[list[str], int]:
    outs = [a.out]
    meta_path = a.out + ".meta.json"
    if a.kind == "lower-bound":
        inst = gen_euclidean_lower_bound(a.d, a.eps, a.copies)
        ps, meta = inst.points, inst.metadata()
    elif a.kind == "h-tree":
        inst = gen_h_tree(a.depth)
        ps, meta = inst.points, inst.metadata()
    else:
        kind = a.kind.replace("-", "_")
        spec = SamplerSpec(kind, a.d, seed=a.seed)
        ps = sample(spec, a.n)
        meta = {"kind": a.kind, "dim": a.d, "n": a.n, "seed": a.seed}
    _write_points(ps, a.out)
    _write_json(meta, meta_path)
    outs.append(meta_path)
    return outs, 0


def cmd_graphs(a):
    ps = _read_points(a.input)
    if a.kind == "knn":
        if a.k is None:
            raise argparse.ArgumentTypeError("--k is required for knn graphs")
        g = knn_graph(ps, a.k, a.p)
    elif a.kind == "gabriel":
        g = gabriel_graph(ps)
    elif a.kind == "mst":
        g = euclidean_mst(ps)
    else:
        g = critical_edges(ps, a.p, a.strict).edges
    with open(a.out, "w") as fh:
        save_graph(g, fh)
    return [a.out], 0


def cmd_spanner(a):
    ps = _read_points(a.input)
    cfg = SpannerConfig(a.eps, a.calib, a.mode, a.p)
    res = build_spanner(ps, cfg)
    code = 0
    if a.certify:
        s = certify(ps, res, cfg, _metric(ps, MetricParams(a.p)))
        if not s <= 1 + a.eps:
            log.error("certified stretch %.12g exceeds 1 + eps = %g (pair %s)", s, 1 + a.eps, res.witness)
            code = 1
    with open(a.out, "w") as fh:
        save_graph(res.graph, fh)
    outs = [a.out]
    if a.stats:
        _write_json(res.stats(cfg), a.stats)
        outs.append(a.stats)
    a._timings = res.build_stats
    return outs, code


def cmd_verify(a):
    ps = _read_points(a.input)
    with open(a.graph, "rb") as fh:
        g = load_graph(fh)
    if g.n != ps.n:
        raise FormatError(f"graph has {g.n} vertices, point set has {ps.n}")
    p = math.inf if a.p == "inf" else float(a.p)
    params = MetricParams(p, a.normalized or math.isinf(p))
    base = _metric(ps, params)
    # graph weights must live on the same scale as the base metric
    if params.normalized and not math.isinf(p):
        base = DistanceMatrix(base.values ** p, params)
    s, pair = stretch(base, g, bottleneck=math.isinf(p))
    outs = [a.out]
    _write_json({"stretch": s, "witness": list(pair) if pair else None, "p": a.p, "normalized": params.normalized, "max_stretch": a.max_stretch}, a.out)
    if a.dump_metric:
        with open(a.dump_metric, "w") as fh:
            base.to_csv(fh)
        outs.append(a.dump_metric)
    return outs, 0 if s <= a.max_stretch else 1


def cmd_experiment(a):
    spec = SamplerSpec(a.sampler.replace("-", "_"), a.d, seed=a.seed)
    cfg = KnnSpannerTrialConfig(spec, a.n, a.c, a.trials)
    if a.kind == "knn-one-spanner":
        rep = knn_one_spanner_trial(cfg, threads=a.threads, threshold=a.threshold)
        ok = rep.summary["whp"]
    else:
        rep = probability_bound_trace(cfg)
        ok = all(row["empirical"] >= row["bound"] - 0.05 for row in rep.summary["curve"])
    with open(a.out, "w") as fh:
        rep.dump(fh)
    return [a.out], 0 if ok else 1


def cmd_persistence(a):
    ps = _read_points(a.input)
    edges = intrinsic_cech_edges(ps, _metric(ps, MetricParams(2.0)))
    with open(a.out, "w") as fh:
        write_edges_csv(edges, fh)
    return [a.out], 0


def cmd_doubling(a):
    ps = _read_points(a.input)
    dm = _metric(ps, MetricParams(a.p))
    rep = estimate_doubling_dimension(ps, dm, a.radii)
    _write_json({"radii": rep.radii, "cover_sizes": rep.cover_sizes, "lambda": rep.lam, "dim_estimate": rep.dim_estimate, "label": rep.label, "p": a.p}, a.out)
    return [a.out], 0


COMMANDS = {
    "gen": cmd_gen,
    "graphs": cmd_graphs,
    "spanner": cmd_spanner,
    "verify": cmd_verify,
    "experiment": cmd_experiment,
    "persistence": cmd_persistence,
    "doubling": cmd_doubling,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=_positive(int), default=1)
    common.add_argument("--quiet", action="store_true")
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")

    parser = argparse.ArgumentParser(prog="edgesq", description="Edge-squared metrics, spanners and proximity graphs.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="generate a point set")
    p.add_argument("--kind", required=True, choices=["lower-bound", "h-tree", "uniform-square", "uniform-ball"])
    p.add_argument("--d", type=_positive(int), default=2)
    p.add_argument("--eps", type=_positive(float), default=0.1)
    p.add_argument("--copies", type=_positive(int), default=1)
    p.add_argument("--depth", type=_positive(int), default=3)
    p.add_argument("--n", type=_positive(int), default=100)
    p.add_argument("--out", required=True)

    p = sub.add_parser("graphs", parents=[common], help="build a proximity graph")
    p.add_argument("--input", required=True)
    p.add_argument("--kind", required=True, choices=["knn", "gabriel", "mst", "critical"])
    p.add_argument("--k", type=_positive(int))
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("spanner", parents=[common], help="build a WSPD spanner")
    p.add_argument("--input", required=True)
    p.add_argument("--eps", type=_positive(float), required=True)
    p.add_argument("--calib", type=_positive(float), default=32.0)
    p.add_argument("--mode", choices=["exact", "grid"], default="exact")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--certify", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--stats")

    p = sub.add_parser("verify", parents=[common], help="stretch of a graph against a p-power metric")
    p.add_argument("--input", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--normalized", action="store_true")
    p.add_argument("--max-stretch", type=float, default=1.0 + 1e-9)
    p.add_argument("--dump-metric", help="write the distance matrix as CSV")
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", parents=[common], help="k-NN 1-spanner statistics")
    p.add_argument("--kind", required=True, choices=["knn-one-spanner", "prob-bound"])
    p.add_argument("--sampler", default="uniform-square", choices=["uniform-square", "uniform-ball", "annulus", "gaussian-mixture"])
    p.add_argument("--d", type=_positive(int), default=2)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--c", type=_positive(float), default=1.0)
    p.add_argument("--trials", type=_positive(int), default=20)
    p.add_argument("--threshold", type=float, default=0.95)
    p.add_argument("--out", required=True)

    p = sub.add_parser("persistence", parents=[common], help="intrinsic Cech edge births")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("doubling", parents=[common], help="greedy doubling-dimension estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--radii", type=_positive(float), nargs="+", required=True)
    p.add_argument("--out", required=True)
    return parser


def _manifest(a, outs, seconds) -> dict:
    flags = {k: v for k, v in vars(a).items() if not k.startswith("_") and k != "command"}
    inputs = [v for k, v in flags.items() if k in ("input", "graph") and v]
    return {
        "subcommand": a.command,
        "flags": flags,
        "seed": a.seed,
        "inputs": inputs,
        "outputs": outs,
        "timings": {"wall_seconds": seconds, **getattr(a, "_timings", {})},
        "version": __version__,
    }


def argv_from_manifest(manifest: dict) -> list[str]:
    """Command line that reproduces the run a manifest describes."""
    argv = [manifest["subcommand"]]
    for key, val in sorted(manifest["flags"].items()):
        flag = "--" + key.replace("_", "-")
        if val is None or (val is False and key != "strict"):
            continue
        if isinstance(val, bool):
            argv.append(flag if val else "--no-" + key)
        elif isinstance(val, list):
            argv += [flag, *map(repr, val)]
        else:
            argv += [flag, repr(val) if isinstance(val, float) else str(val)]
    return argv


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.ERROR if a.quiet else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        outs, code = COMMANDS[a.command](a)
    except (FormatError, FileNotFoundError, ValueError, argparse.ArgumentTypeError) as e:
        print(f"edgesq {a.command}: error: {e}", file=sys.stderr)
        return 2
    Path(a.manifest or a.out + ".manifest.json").write_text(json.dumps(_manifest(a, outs, time.perf_counter() - t0), indent=2, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
