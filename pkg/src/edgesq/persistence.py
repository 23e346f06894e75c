"""Distance-to-sample filtrations and intrinsic Cech edges of the nearest-neighbour geodesic.

On sample points the nearest-neighbour geodesic equals the edge-squared
metric, so edge births are read off the edge-squared distance matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DistanceMatrix, PointSet
from .metrics import edge_squared


def nearest_distance(ps: PointSet, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (ps.dim,):
        raise ValueError(f"query has shape {x.shape}, expected ({ps.dim},)")
    diff = ps.coords - x
    return float(np.sqrt((diff * diff).sum(axis=1).min()))


@dataclass(frozen=True)
class FiltrationProbe:
    query: tuple
    r: float

    @property
    def dn_min(self) -> float:
        # min over the sample of the nearest-neighbour geodesic from the query;
        # the straight segment to the nearest sample point attains 2 r^2
        return 2.0 * self.r * self.r


def probe(ps: PointSet, x) -> FiltrationProbe:
    return FiltrationProbe(tuple(float(c) for c in np.asarray(x).ravel()), nearest_distance(ps, x))


def filtration_membership(ps: PointSet, x, alpha: float) -> tuple[bool, bool]:
    """Membership of ``x`` in the distance sublevel set at ``alpha`` and in
    the geodesic sublevel set at ``2 alpha^2``; the two always agree."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    pr = probe(ps, x)
    return pr.r <= alpha, pr.dn_min <= 2.0 * alpha * alpha


def intrinsic_cech_edges(ps: PointSet, d2: DistanceMatrix | None = None) -> list[tuple[int, int, float]]:
    """All pairs with birth ``d_2(u, v) / 2``, ascending by birth then ``(u, v)``."""
    if ps.n < 2:
        raise ValueError("need at least two points")
    if d2 is None:
        d2 = edge_squared(ps)
    iu, iv = np.triu_indices(ps.n, 1)
    births = d2.values[iu, iv] / 2.0
    order = np.lexsort((iv, iu, births))
    return [(int(iu[k]), int(iv[k]), float(births[k])) for k in order]


def zero_dim_merges(n: int, edges) -> list[tuple[float, int, int]]:
    """Component merges (birth, u, v) when edges are added in the given order."""
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    merges = []
    for u, v, b in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
            merges.append((b, u, v))
            if len(merges) == n - 1:
                break
    return merges


def components_at(n: int, edges, threshold: float) -> np.ndarray:
    """Component label per vertex using the edges born at or before ``threshold``."""
    parent = np.arange(n)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v, b in edges:
        if b > threshold:
            continue
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return np.array([find(i) for i in range(n)])


def write_edges_csv(edges, sink) -> None:
    sink.write("u,v,birth\n")
    for u, v, b in edges:
        sink.write(f"{u},{v},{b!r}\n")
