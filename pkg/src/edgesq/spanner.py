"""(1+eps)-spanners of the edge-squared metric from a well-separated pair decomposition."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import DistanceMatrix, ExperimentReport, MetricParams, PointSet, WeightedGraph
from .metrics import power_metric, stretch
from .wspd import approx_closest_edge, build_split_tree, build_wspd

DEFAULT_CALIB = 32.0


@dataclass(frozen=True)
class SpannerConfig:
    """``delta = sqrt(epsilon / calib)`` and the WSPD separation is ``1 / delta``."""

    epsilon: float
    calib: float = DEFAULT_CALIB
    selection_mode: str = "exact"
    metric_power: float = 2.0

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not self.calib > 0:
            raise ValueError(f"calibration constant must be positive, got {self.calib}")
        if self.selection_mode not in ("exact", "grid"):
            raise ValueError(f"unknown selection mode {self.selection_mode!r}")
        if not self.metric_power >= 1:
            raise ValueError("metric power must be >= 1")

    @property
    def delta(self) -> float:
        return math.sqrt(self.epsilon / self.calib)

    @property
    def separation(self) -> float:
        return 1.0 / self.delta

    @property
    def experimental(self) -> bool:
        # the stretch guarantee is only proven for squared lengths
        return self.metric_power != 2.0

    def metadata(self) -> dict:
        d = asdict(self)
        d.update(delta=self.delta, separation=self.separation, experimental=self.experimental)
        return d


@dataclass
class SpannerResult:
    graph: WeightedGraph
    pair_count: int
    edges_per_point: float
    build_stats: dict = field(default_factory=dict)
    certified_stretch: float | None = None
    witness: tuple[int, int] | None = None

    def stats(self, cfg: SpannerConfig, timings: bool = False) -> dict:
        out = {
            "config": cfg.metadata(),
            "n": self.graph.n,
            "edges": self.graph.m,
            "pair_count": self.pair_count,
            "edges_per_point": self.edges_per_point,
            "certified_stretch": self.certified_stretch,
            "witness": list(self.witness) if self.witness else None,
        }
        if timings:
            out["build_stats"] = self.build_stats
        return out


def _exact_edges(ps: PointSet, wspd) -> tuple[np.ndarray, np.ndarray]:
    """Bichromatic closest pair of every WSPD pair in one flat pass.

    The cross products of all pairs together hold each point pair exactly
    once, so this is ``n (n - 1) / 2`` distance evaluations in total. Ties
    keep the first pair in A-major order, as ``approx_closest_edge`` does.
    """
    tree, pairs = wspd.tree, wspd.pairs
    sa, sb = tree.start[pairs[:, 0]], tree.start[pairs[:, 1]]
    na = tree.end[pairs[:, 0]] - sa
    nb = tree.end[pairs[:, 1]] - sb
    sizes = na * nb
    offs = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    pid = np.repeat(np.arange(len(pairs)), sizes)
    r = np.arange(int(sizes.sum())) - offs[pid]
    ia = tree.perm[sa[pid] + r // nb[pid]]
    ib = tree.perm[sb[pid] + r % nb[pid]]
    diff = ps.coords[ia] - ps.coords[ib]
    d = np.einsum("ij,ij->i", diff, diff)
    mins = np.minimum.reduceat(d, offs)
    hit = np.flatnonzero(d == mins[pid])
    _, first = np.unique(pid[hit], return_index=True)
    pick = hit[first]
    return ia[pick], ib[pick]


def build_spanner(ps: PointSet, cfg: SpannerConfig) -> SpannerResult:
    """One approximately-shortest edge per well-separated pair."""
    t0 = time.perf_counter()
    tree = build_split_tree(ps)
    t1 = time.perf_counter()
    wspd = build_wspd(tree, cfg.separation)
    t2 = time.perf_counter()
    pairs = wspd.pairs
    if cfg.selection_mode == "exact":
        eu, ev = _exact_edges(ps, wspd)
    else:
        eu = np.empty(len(pairs), dtype=np.int64)
        ev = np.empty(len(pairs), dtype=np.int64)
        for k in range(len(pairs)):
            eu[k], ev[k] = approx_closest_edge(ps, wspd.point_pairs(k), "grid", cfg.delta)
    t3 = time.perf_counter()
    g = WeightedGraph.from_pairs(ps, np.column_stack([eu, ev]), cfg.metric_power)
    stats = {
        "mode": cfg.selection_mode,
        "tree_nodes": tree.num_nodes,
        "seconds_tree": t1 - t0,
        "seconds_wspd": t2 - t1,
        "seconds_select": t3 - t2,
    }
    return SpannerResult(g, len(pairs), g.m / ps.n, stats)


def certify(ps: PointSet, result: SpannerResult, cfg: SpannerConfig, base: DistanceMatrix | None = None) -> float:
    """Exact maximum stretch of the spanner against the full p-power metric."""
    if base is None:
        base = power_metric(ps, MetricParams(cfg.metric_power))
    t = time.perf_counter()
    s, pair = stretch(base, result.graph)
    result.build_stats["seconds_certify"] = time.perf_counter() - t
    result.certified_stretch = s
    result.witness = pair
    return s


def fit_exponent(epsilons, values) -> float:
    """Least-squares ``b`` in ``values ~ eps^-b`` on log-log axes."""
    x = -np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def size_scaling_study(dims, epsilons, n: int, trials: int = 1, seed: int = 0, calib: float = DEFAULT_CALIB, mode: str = "exact") -> ExperimentReport:
    """Mean edges per point on uniform cubes, per dimension and epsilon."""
    if n < 1 or trials < 1 or not dims or not epsilons:
        raise ValueError("dims, epsilons, n and trials must be positive")
    rows = []
    for d in dims:
        for t in range(trials):
            x = np.random.default_rng(seed + t).random((n, d))
            ps = PointSet(x)
            for eps in epsilons:
                res = build_spanner(ps, SpannerConfig(eps, calib, mode))
                rows.append({"dim": d, "epsilon": eps, "trial": t, "edges": res.graph.m, "pair_count": res.pair_count, "edges_per_point": res.edges_per_point})
    summary = {"table": [], "exponent": {}}
    for d in dims:
        means = []
        for eps in epsilons:
            vals = [r["edges_per_point"] for r in rows if r["dim"] == d and r["epsilon"] == eps]
            means.append(float(np.mean(vals)))
            summary["table"].append({"dim": d, "epsilon": eps, "mean_edges_per_point": means[-1]})
        summary["exponent"][str(d)] = fit_exponent(epsilons, means)
    cfg = {"dims": list(dims), "epsilons": list(epsilons), "n": n, "trials": trials, "seed": seed, "calib": calib, "mode": mode}
    return ExperimentReport(cfg, rows, summary)
