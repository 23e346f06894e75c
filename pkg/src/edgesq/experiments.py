"""Random samplers and the k-NN-contains-Gabriel trial harness."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .core import RTOL, ExperimentReport, PointSet, WeightedGraph
from .metrics import edge_squared, stretch
from .proximity import gabriel_graph, knn_graph, knn_order

log = logging.getLogger(__name__)

SAMPLERS = ("uniform_square", "uniform_ball", "annulus", "gaussian_mixture")
DEFAULT_PARAMS = {
    "uniform_square": {},
    "uniform_ball": {},
    "annulus": {"inner": 0.5, "outer": 1.0},
    "gaussian_mixture": {"separation": 10.0, "sigma": 0.05, "modes": 2},
}


@dataclass(frozen=True)
class SamplerSpec:
    kind: str = "uniform_square"
    dim: int = 2
    params: dict = field(default_factory=dict, hash=False)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        p = self.resolved()
        if self.kind == "annulus" and not 0 <= p["inner"] < p["outer"]:
            raise ValueError("annulus needs 0 <= inner < outer")
        if self.kind == "gaussian_mixture" and (p["sigma"] <= 0 or int(p["modes"]) < 1):
            raise ValueError("gaussian_mixture needs sigma > 0 and modes >= 1")

    def resolved(self) -> dict:
        return {**DEFAULT_PARAMS[self.kind], **self.params}


def _directions(rng, n, d):
    g = rng.standard_normal((n, d))
    norm = np.linalg.norm(g, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    return g / norm


def sample(spec: SamplerSpec, n: int) -> PointSet:
    """``n`` i.i.d. draws; the same spec always gives the same points."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(spec.seed)
    d = spec.dim
    p = spec.resolved()
    if spec.kind == "uniform_square":
        x = rng.random((n, d))
    elif spec.kind == "uniform_ball":
        x = _directions(rng, n, d) * rng.random((n, 1)) ** (1.0 / d)
    elif spec.kind == "annulus":
        lo, hi = p["inner"] ** d, p["outer"] ** d
        r = (lo + (hi - lo) * rng.random((n, 1))) ** (1.0 / d)
        x = _directions(rng, n, d) * r
    else:
        modes = int(p["modes"])
        which = rng.integers(0, modes, size=n)
        centers = np.zeros((modes, d))
        centers[:, 0] = p["separation"] * np.arange(modes)
        x = centers[which] + p["sigma"] * rng.standard_normal((n, d))
    return PointSet(x)


@dataclass(frozen=True)
class KnnSpannerTrialConfig:
    sampler: SamplerSpec
    n: int
    c: float = 1.0
    trials: int = 20

    def __post_init__(self):
        if self.n < 10:
            raise ValueError("n must be >= 10")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.c > 0:
            raise ValueError("c must be positive")

    @property
    def raw_k(self) -> int:
        return math.ceil(self.c * 2 ** self.sampler.dim * math.log(self.n))

    @property
    def k(self) -> int:
        return min(max(self.raw_k, 1), self.n - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["k"] = self.k
        return d


def gabriel_edge_stretch(g: WeightedGraph, gabriel: WeightedGraph) -> float:
    """Largest ``d_g(u, v) / |u - v|^2`` over Gabriel edges ``(u, v)``.

    The Gabriel graph is an exact 1-spanner of the edge-squared metric, so a
    value <= 1 means the closure of ``g`` equals the edge-squared metric
    (``g`` can never beat it). Searches stop at the longest Gabriel edge.
    """
    if gabriel.m == 0:
        return 1.0
    src = np.unique(gabriel.u)
    limit = float(gabriel.w.max()) * (1 + 1e-6)
    d = dijkstra(g.to_sparse(), directed=False, indices=src, limit=limit)
    got = d[np.searchsorted(src, gabriel.u), gabriel.v]
    w = gabriel.w
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(w > 0, got / np.where(w > 0, w, 1.0), np.where(got > 1e-250, np.inf, 1.0))
    return float(ratio.max())


def _run_trial(cfg: KnnSpannerTrialConfig, t: int, full_check_max_n: int) -> dict:
    spec = replace(cfg.sampler, seed=cfg.sampler.seed + t)
    ps = sample(spec, cfg.n)
    order = knn_order(ps)
    knn = knn_graph(ps, cfg.k, 2.0, order)
    gab = gabriel_graph(ps)
    knn_edges = knn.edge_set()
    missing = sorted(gab.edge_set() - knn_edges)
    if cfg.n <= full_check_max_n:
        worst, _ = stretch(edge_squared(ps), knn)
        method = "full"
    else:
        worst = gabriel_edge_stretch(knn, gab)
        method = "gabriel-edges"
    rank = np.full((cfg.n, cfg.n), -1, dtype=np.int64)
    rows = np.arange(cfg.n)[:, None]
    rank[rows, order] = np.arange(cfg.n - 1)[None, :]
    census = []
    for u, v in missing[:20]:
        census.append({"u": u, "v": v, "sq_length": float(((ps[u] - ps[v]) ** 2).sum()), "rank_uv": int(rank[u, v]) + 1, "rank_vu": int(rank[v, u]) + 1})
    return {
        "trial": t,
        "seed": spec.seed,
        "k": cfg.k,
        "knn_edges": knn.m,
        "gabriel_edges": gab.m,
        "gabriel_in_knn": not missing,
        "one_spanner": bool(worst <= 1 + RTOL),
        "max_stretch": worst,
        "check": method,
        "missing_gabriel_edges": len(missing),
        "census": census,
    }


def knn_one_spanner_trial(cfg: KnnSpannerTrialConfig, threads: int = 1, full_check_max_n: int = 600, threshold: float = 0.95) -> ExperimentReport:
    """Per trial: does the k-NN graph contain the Gabriel graph, and is it an exact 1-spanner?

    Trial ``t`` uses seed ``sampler.seed + t``. Up to ``full_check_max_n``
    points the 1-spanner test compares full closures; above that it
    checks every Gabriel edge against the k-NN closure.
    """
    warnings = []
    if cfg.k != cfg.raw_k:
        warnings.append(f"k = ceil(c 2^d ln n) = {cfg.raw_k} clamped to {cfg.k}")
        log.warning(warnings[-1])
    ts = range(cfg.trials)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(lambda t: _run_trial(cfg, t, full_check_max_n), ts))
    else:
        rows = [_run_trial(cfg, t, full_check_max_n) for t in ts]
    contain = float(np.mean([r["gabriel_in_knn"] for r in rows]))
    span = float(np.mean([r["one_spanner"] for r in rows]))
    implication = all(r["one_spanner"] for r in rows if r["gabriel_in_knn"])
    summary = {
        "k": cfg.k,
        "gabriel_containment_fraction": contain,
        "one_spanner_fraction": span,
        "containment_implies_spanner": implication,
        "threshold": threshold,
        "whp": span >= threshold,
        "warnings": warnings,
    }
    return ExperimentReport(cfg.to_dict(), rows, summary)


def probability_lower_bound(k: int, dim: int, eps: float = 0.1) -> float:
    return 1.0 - (1.0 - (1.0 - eps) / 2**dim) ** k


def ball_census(ps: PointSet, order: np.ndarray, k: int, pairs) -> tuple[int, int]:
    """Count pairs (q, o) with q outside o's k-NN ball and how many have a
    k-nearest neighbour of o strictly inside the ball with diameter qo.

    Pairs with q among o's k nearest neighbours are excluded.
    """
    x = ps.coords
    used = hits = 0
    for q, o in pairs:
        nbrs = order[o, :k]
        if q in nbrs or q == o:
            continue
        used += 1
        pn = x[nbrs]
        dots = ((x[q] - pn) * (x[o] - pn)).sum(axis=1)
        hits += bool(np.any(dots < 0))
    return used, hits


def probability_bound_trace(cfg: KnnSpannerTrialConfig, ks=(8, 16, 32), eps: float = 0.1, centers: int = 200, shell: int | None = None) -> ExperimentReport:
    """Monte Carlo estimate of P(ball on qo holds a k-NN of o) against the analytic lower bound.

    For ``centers`` random points o per trial, q ranges over the ``shell``
    nearest points that are not k-NN-adjacent to o (default ``shell = k``):
    the hardest pairs, just outside the k-NN ball.
    """
    if cfg.sampler.kind not in ("uniform_square", "uniform_ball") or cfg.sampler.dim not in (1, 2):
        raise ValueError("probability trace supports uniform samplers in 1 or 2 dimensions")
    rows = []
    ks = [min(int(k), cfg.n - 1) for k in ks]
    for t in range(cfg.trials):
        spec = replace(cfg.sampler, seed=cfg.sampler.seed + t)
        ps = sample(spec, cfg.n)
        order = knn_order(ps)
        rng = np.random.default_rng(spec.seed)
        os_ = rng.choice(cfg.n, size=min(centers, cfg.n), replace=False)
        for k in ks:
            nk = order[:, :k]
            is_nbr = np.zeros((cfg.n, cfg.n), dtype=bool)
            is_nbr[np.repeat(np.arange(cfg.n), k), nk.ravel()] = True
            adj = is_nbr | is_nbr.T
            width = shell or k
            pairs = []
            for o in os_:
                cand = order[o, k:]
                cand = cand[~adj[o, cand]][:width]
                pairs.extend((int(q), int(o)) for q in cand)
            used, hits = ball_census(ps, order, k, pairs)
            rows.append({"trial": t, "k": k, "pairs": used, "hits": hits})
    curve = []
    for k in ks:
        used = sum(r["pairs"] for r in rows if r["k"] == k)
        hits = sum(r["hits"] for r in rows if r["k"] == k)
        emp = hits / used if used else 1.0
        curve.append({"k": k, "pairs": used, "empirical": emp, "bound": probability_lower_bound(k, cfg.sampler.dim, eps)})
    conf = cfg.to_dict()
    conf.update(ks=ks, eps=eps, centers=centers, shell=shell)
    return ExperimentReport(conf, rows, {"curve": curve})
