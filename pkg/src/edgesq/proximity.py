"""Brute-force proximity graphs: k-NN, Gabriel, Euclidean MST and critical edges."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import RTOL, DistanceMatrix, MetricParams, PointSet, WeightedGraph
from .metrics import power_metric, power_weights

log = logging.getLogger(__name__)

GABRIEL_TOL = 1e-12


def knn_order(ps: PointSet) -> np.ndarray:
    """Row i lists the other points by distance from i, ties by index."""
    sq = ps.sq_dists()
    np.fill_diagonal(sq, np.inf)
    # stable sort keeps equal distances in index order
    return np.argsort(sq, axis=1, kind="stable")[:, : ps.n - 1]


def knn_graph(ps: PointSet, k: int, weight_power: float = 2.0, order: np.ndarray | None = None) -> WeightedGraph:
    """Undirected union of every point's ``k`` nearest neighbours."""
    n = ps.n
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, {n - 1}], got {k}")
    if order is None:
        order = knn_order(ps)
    nbr = order[:, :k]
    src = np.repeat(np.arange(n), k)
    return WeightedGraph.from_pairs(ps, np.column_stack([src, nbr.ravel()]), weight_power)


def _gabriel_ok(x: np.ndarray, a: int, b: np.ndarray, cand: np.ndarray | None, tol: float):
    """For edges (a, b_j): True where no candidate w lies strictly inside the diametral ball.

    Also returns the smallest normalised dot product seen, for degeneracy warnings.
    """
    pa = x[a]
    pb = x[b]
    pw = x if cand is None else x[cand]
    # (a - w).(b - w) for every (b_j, w)
    dots = (pa - pw)[None, :, :] * (pb[:, None, :] - pw[None, :, :])
    dots = dots.sum(axis=2)
    ab2 = ((pa - pb) ** 2).sum(axis=1)
    rel = dots / np.where(ab2 > 0, ab2, 1.0)[:, None]
    ids = np.arange(len(x)) if cand is None else cand
    skip = (ids[None, :] == a) | (ids[None, :] == b[:, None])
    rel[skip] = np.inf
    ok = ~np.any(rel <= -tol, axis=1)
    near = np.any(np.abs(rel) < tol, axis=1)
    return ok, near


def _prefilter_survivors(x: np.ndarray, a: int, b: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """Drop pairs (a, b_j) that some candidate w clearly invalidates.

    Coordinates are centred at ``a`` so ``(a-w).(b-w) = |w'|^2 - b'.w'`` with
    rounding error of order 1e-16 |b'|^2 whenever w is inside the ball; a
    1e-9 margin therefore never rejects a true Gabriel edge.
    """
    pw = x[cand] - x[a]
    pb = x[b] - x[a]
    dots = (pw * pw).sum(axis=1)[None, :] - pb @ pw.T
    ab2 = (pb * pb).sum(axis=1)
    dots[cand[None, :] == b[:, None]] = np.inf
    return ~np.any(dots < -1e-9 * ab2[:, None], axis=1)


def gabriel_graph(ps: PointSet, prefilter: int = 48, block: int = 256) -> WeightedGraph:
    """Edges whose open diametral ball holds no other sample point.

    A point ``w`` excludes ``(u, v)`` iff ``(u-w).(v-w) <= -tol*|u-v|^2``;
    points on the boundary sphere do not exclude. Weights are squared
    lengths.

    Every pair is tested exhaustively. The ``prefilter`` nearest
    neighbours of ``u`` are tried first so most non-edges are rejected
    cheaply; survivors are then checked against all points.
    """
    n = ps.n
    if n < 2:
        raise ValueError("Gabriel graph needs at least two points")
    x = ps.coords
    order = knn_order(ps) if prefilter and n - 2 > prefilter else None
    pairs = []
    degenerate = False
    for a in range(n - 1):
        b = np.arange(a + 1, n)
        if order is not None:
            b = b[_prefilter_survivors(x, a, b, order[a, :prefilter])]
        for s in range(0, len(b), block):
            chunk = b[s : s + block]
            ok, near = _gabriel_ok(x, a, chunk, None, GABRIEL_TOL)
            degenerate |= bool(np.any(near & ok))
            pairs.extend((a, int(c)) for c in chunk[ok])
    if degenerate:
        log.warning("Gabriel test met points on (or within 1e-12 of) a diametral sphere")
    return WeightedGraph.from_pairs(ps, np.array(pairs, dtype=np.int64).reshape(-1, 2), 2.0)


def euclidean_mst(ps: PointSet) -> WeightedGraph:
    """Dense Prim, O(n^2). Ties go to the lowest vertex index."""
    n = ps.n
    if n == 1:
        return WeightedGraph(1, [], [], [])
    d = ps.dists()
    in_tree = np.zeros(n, dtype=bool)
    best = d[0].copy()
    parent = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[0] = np.inf
    us, vs, ws = [], [], []
    for _ in range(n - 1):
        masked = np.where(in_tree, np.inf, best)
        k = int(np.argmin(masked))
        us.append(int(parent[k]))
        vs.append(k)
        ws.append(float(d[parent[k], k]))
        in_tree[k] = True
        closer = (~in_tree) & (d[k] < best)
        best[closer] = d[k][closer]
        parent[closer] = k
    return WeightedGraph(n, us, vs, ws)


@dataclass(frozen=True, eq=False)
class CriticalEdgeSet:
    edges: WeightedGraph
    strict: bool
    p: float

    def edge_set(self) -> set[tuple[int, int]]:
        return self.edges.edge_set()

    def __len__(self):
        return self.edges.m


def detour_costs(dp: np.ndarray) -> np.ndarray:
    """``out[u, v] = min over w not in {u, v} of dp[u, w] + dp[w, v]``.

    With positive weights this is the cheapest path from u to v that
    avoids the direct edge (a walk through w reusing uv costs more than uv).
    """
    n = dp.shape[0]
    out = np.full((n, n), np.inf)
    for w in range(n):
        via = dp[:, w, None] + dp[None, w, :]
        via[w, :] = np.inf
        via[:, w] = np.inf
        np.minimum(out, via, out=out)
    return out


def critical_edges(ps: PointSet, p: float = 2.0, strict: bool = True, dp: DistanceMatrix | None = None, rtol: float = RTOL) -> CriticalEdgeSet:
    """Pairs whose direct edge is a (strict: the only) shortest path in the p-power graph.

    strict: every alternative path costs more than ``||u-v||^p * (1 + rtol)``.
    non-strict: no alternative path is cheaper than ``||u-v||^p * (1 - rtol)``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    n = ps.n
    if n < 2:
        return CriticalEdgeSet(WeightedGraph(n, [], [], []), strict, p)
    if dp is None:
        dp = power_metric(ps, MetricParams(p))
    direct = power_weights(ps, p)
    detour = detour_costs(dp.values)
    if strict:
        crit = detour > direct * (1 + rtol)
    else:
        crit = detour >= direct * (1 - rtol)
    iu = np.argwhere(np.triu(crit, 1))
    return CriticalEdgeSet(WeightedGraph.from_pairs(ps, iu, p), strict, p)
