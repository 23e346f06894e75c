"""Exact p-power shortest-path metrics, stretch evaluation and the lifting map.

All-pairs distances are computed over the implicit complete graph. The
primary route is a dense Dijkstra run from every source at once
(``O(n^2)`` per source); Floyd-Warshall is kept as an independent
cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .core import RTOL, DistanceMatrix, MetricParams, PointSet, WeightedGraph

# path costs at or below this are treated as zero (see WeightedGraph.to_sparse)
_ZERO = 1e-250


def power_weights(ps: PointSet, p: float) -> np.ndarray:
    """Complete-graph weight matrix ``||x_i - x_j||^p``."""
    if p == 2:
        return ps.sq_dists()
    return ps.dists() ** p


def dijkstra_apsp(w: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths on a dense weight matrix.

    Every row runs its own O(n^2) dense Dijkstra; the rows advance in
    lock-step so that each step is a single vectorised operation.
    ``inf`` entries are missing edges.
    """
    n = w.shape[0]
    rows = np.arange(n)
    dist = np.full((n, n), np.inf)
    dist[rows, rows] = 0.0
    done = np.zeros((n, n), dtype=bool)
    masked = np.empty_like(dist)
    for _ in range(n):
        np.copyto(masked, dist)
        masked[done] = np.inf
        k = masked.argmin(axis=1)
        done[rows, k] = True
        np.minimum(dist, dist[rows, k][:, None] + w[k], out=dist)
    return dist


def dijkstra_sssp(w: np.ndarray, source: int, skip_edge: tuple[int, int] | None = None) -> np.ndarray:
    """Single-source dense Dijkstra, optionally with one edge removed."""
    n = w.shape[0]
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    done = np.zeros(n, dtype=bool)
    for _ in range(n):
        masked = np.where(done, np.inf, dist)
        k = int(masked.argmin())
        if not np.isfinite(masked[k]):
            break
        done[k] = True
        row = w[k]
        if skip_edge is not None and k in skip_edge:
            row = row.copy()
            other = skip_edge[1] if k == skip_edge[0] else skip_edge[0]
            row[other] = np.inf
        np.minimum(dist, dist[k] + row, out=dist)
    return dist


def floyd_warshall(w: np.ndarray) -> np.ndarray:
    d = np.array(w, dtype=np.float64)
    np.fill_diagonal(d, 0.0)
    for k in range(d.shape[0]):
        np.minimum(d, d[:, k, None] + d[None, k, :], out=d)
    return d


def minimax_floyd(w: np.ndarray) -> np.ndarray:
    """Bottleneck closure: minimise over paths the largest edge weight."""
    d = np.array(w, dtype=np.float64)
    np.fill_diagonal(d, 0.0)
    for k in range(d.shape[0]):
        np.minimum(d, np.maximum(d[:, k, None], d[None, k, :]), out=d)
    return d


def power_metric(ps: PointSet, params: MetricParams = MetricParams(), method: str = "dijkstra") -> DistanceMatrix:
    """Shortest-path closure of the complete graph weighted by ``||a-b||^p``.

    With ``params.normalized`` every entry is raised to ``1/p``; the
    normalized ``p = inf`` case is the minimax distance.
    ``method`` is ``"dijkstra"`` (default), ``"floyd"``, or ``"gabriel"``:
    sparse Dijkstra over the Gabriel graph, which for ``p >= 2`` is an
    exact 1-spanner and scales to a few thousand points.
    """
    p = params.p
    if math.isinf(p):
        return minimax_distance(ps)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    scale = 1.0
    if params.normalized:
        # large p underflows on small distances; the normalized metric is
        # scale-equivariant so work at unit diameter
        scale = float(ps.dists().max()) or 1.0
        w = (ps.dists() / scale) ** p
    else:
        w = power_weights(ps, p)
    if method == "gabriel":
        if p < 2:
            raise ValueError("the Gabriel route is exact only for p >= 2")
        from .proximity import gabriel_graph

        g = gabriel_graph(ps)
        d = graph_closure(WeightedGraph(g.n, g.u, g.v, w[g.u, g.v]))
    elif method == "dijkstra":
        d = dijkstra_apsp(w)
    elif method == "floyd":
        d = floyd_warshall(w)
    else:
        raise ValueError(f"unknown APSP method {method!r}")
    d = np.minimum(d, d.T)
    if params.normalized:
        d = d ** (1.0 / p) * scale
    return DistanceMatrix(d, params)


def edge_squared(ps: PointSet, method: str = "dijkstra") -> DistanceMatrix:
    return power_metric(ps, MetricParams(2.0), method=method)


def minimax_distance(ps: PointSet) -> DistanceMatrix:
    """Minimum over paths of the longest Euclidean hop, on the complete graph."""
    d = minimax_floyd(ps.dists())
    return DistanceMatrix(np.minimum(d, d.T), MetricParams(math.inf, True))


@dataclass
class LimitReport:
    p_values: list[float]
    monotone: bool
    above_minimax: bool
    max_gap: float
    diameter: float
    gaps: list[float] = field(default_factory=list)


def normalized_power_limit_check(ps: PointSet, p_sequence) -> LimitReport:
    """Check that normalized p-power distances decrease in p towards the minimax distance.

    ``gaps[i]`` is the largest pairwise excess over minimax at ``p_sequence[i]``;
    ``max_gap`` is the one at the largest p.
    """
    ps_ = [float(p) for p in p_sequence]
    if any(p < 1 for p in ps_) or any(b <= a for a, b in zip(ps_, ps_[1:])):
        raise ValueError("p_sequence must be increasing and >= 1")
    mm = minimax_distance(ps).values
    scale = float(mm.max()) or 1.0
    tol = RTOL * max(scale, float(ps.dists().max()))
    monotone = above = True
    gaps = []
    prev = None
    for p in ps_:
        d = power_metric(ps, MetricParams(p, normalized=True)).values
        if prev is not None and np.any(d > prev + tol):
            monotone = False
        if np.any(d < mm - tol):
            above = False
        gaps.append(float((d - mm).max()))
        prev = d
    diameter = float(ps.dists().max())
    return LimitReport(ps_, monotone, above, gaps[-1] if gaps else 0.0, diameter, gaps)


def graph_closure(g: WeightedGraph, bottleneck: bool = False) -> np.ndarray:
    """All-pairs shortest-path distances of a (sparse) weighted graph.

    ``bottleneck`` minimises the largest edge on a path instead of the sum.
    """
    if g.n == 0:
        return np.zeros((0, 0))
    if bottleneck:
        w = np.full((g.n, g.n), np.inf)
        w[g.u, g.v] = w[g.v, g.u] = g.w
        return minimax_floyd(w)
    d = shortest_path(g.to_sparse(), method="D", directed=False)
    d[d <= _ZERO] = 0.0
    return d


def stretch(base: DistanceMatrix | np.ndarray, g: WeightedGraph, bottleneck: bool = False) -> tuple[float, tuple[int, int] | None]:
    """Largest ratio of graph distance to base distance, with a witnessing pair.

    A disconnected graph yields ``inf`` and a pair that cannot reach each other.
    Pairs at base distance zero count as ratio 1 when the graph also joins
    them at zero cost. ``bottleneck`` measures graph paths by their
    longest edge, the right notion against a minimax base.
    """
    b = base.values if isinstance(base, DistanceMatrix) else np.asarray(base)
    if b.shape != (g.n, g.n):
        raise ValueError("base metric and graph disagree on the vertex count")
    if g.n < 2:
        return 1.0, None
    ds = graph_closure(g, bottleneck)
    iu = np.triu_indices(g.n, 1)
    num, den = ds[iu], b[iu]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 0, np.inf, 1.0))
    k = int(np.argmax(ratio))
    return float(ratio[k]), (int(iu[0][k]), int(iu[1][k]))


# --------------------------------------------------------------------------
# lifting map
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LiftingMap:
    """Map of the sample into R^n placing every point on a vertex of a box.

    ``order[i]`` is the i-th point by edge-squared distance from the
    source; ``images[i]`` is its image, whose first ``i + 1`` coordinates
    are ``side_lengths[:i + 1]`` and the rest zero.
    """

    source_index: int
    order: np.ndarray
    side_lengths: np.ndarray
    source_dists: np.ndarray  # d_2(source, order[i])
    images: np.ndarray

    @property
    def n(self) -> int:
        return len(self.order)

    def image_of(self, point: int) -> np.ndarray:
        return self.images[self.rank[point]]

    @property
    def rank(self) -> np.ndarray:
        r = np.empty(self.n, dtype=np.int64)
        r[self.order] = np.arange(self.n)
        return r

    def image_points(self) -> PointSet:
        """Images indexed like the original points."""
        return PointSet(self.images[self.rank])


def build_lifting_map(ps: PointSet, source: int, d2: DistanceMatrix | None = None) -> LiftingMap:
    if not 0 <= source < ps.n:
        raise IndexError(f"source {source} out of range")
    if d2 is None:
        d = dijkstra_sssp(ps.sq_dists(), source)
    else:
        d = np.asarray(d2.values[source], dtype=np.float64)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    steps = np.diff(ds, prepend=ds[0])
    alpha = np.sqrt(np.maximum(steps, 0.0))
    alpha[0] = 0.0
    images = np.tril(np.broadcast_to(alpha, (ps.n, ps.n)))
    return LiftingMap(int(source), order, alpha, ds, images)


@dataclass
class LiftingReport:
    lipschitz: bool
    box_vertices: bool
    preserves_source_distance: bool
    failures: list[tuple[str, int, int, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.lipschitz and self.box_vertices and self.preserves_source_distance


def verify_lifting_properties(lm: LiftingMap, ps: PointSet, method: str = "floyd", rtol: float = RTOL) -> LiftingReport:
    """Re-derive the three lifting properties from raw coordinates.

    Lipschitz and distance checks are made on squared lengths with an
    absolute slack of ``rtol`` times the largest source distance; square
    roots of near-cancelling differences would otherwise amplify rounding.
    The lifted edge-squared metric is recomputed with ``method``.
    """
    n = ps.n
    scale = max(float(lm.source_dists.max()), float(ps.sq_dists().max()), 1e-300)
    slack = rtol * scale
    failures: list[tuple[str, int, int, float]] = []

    lifted = lm.image_points()
    img_sq = lifted.sq_dists()
    src_sq = ps.sq_dists()
    excess = img_sq - src_sq
    bad = np.argwhere(np.triu(excess > slack, 1))
    failures += [("lipschitz", int(a), int(b), float(excess[a, b])) for a, b in bad]
    lipschitz = len(bad) == 0

    box = bool(np.all(lm.side_lengths >= 0))
    expected = np.tril(np.broadcast_to(lm.side_lengths, (n, n)))
    mismatch = np.argwhere(np.any(lm.images != expected, axis=1)).ravel()
    for i in mismatch:
        failures.append(("box", int(lm.order[i]), -1, float(np.abs(lm.images[i] - expected[i]).max())))
    box = box and len(mismatch) == 0

    dprime = power_metric(lifted, MetricParams(2.0), method=method).values[lm.source_index]
    want = np.empty(n)
    want[lm.order] = lm.source_dists
    diff = np.abs(dprime - want)
    bad = np.flatnonzero(diff > slack)
    failures += [("preserve", lm.source_index, int(j), float(diff[j])) for j in bad]
    return LiftingReport(lipschitz, box, len(bad) == 0, failures)
