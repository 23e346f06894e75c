"""Adversarial point sets: Euclidean spanner lower bounds and the H-tree, plus a doubling estimator."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import DistanceMatrix, PointSet
from .metrics import dijkstra_sssp, power_weights

COPY_SHIFT = 12.0


@dataclass(frozen=True, eq=False)
class LowerBoundInstance:
    points: PointSet
    part_a: np.ndarray
    part_b: np.ndarray
    eps: float
    copies: int

    def metadata(self) -> dict:
        return {
            "kind": "lower-bound",
            "eps": self.eps,
            "copies": self.copies,
            "part_a": self.part_a.tolist(),
            "part_b": self.part_b.tolist(),
            "cross_distance": math.sqrt(2.0),
        }


def sphere_packing(k: int, spacing: float) -> np.ndarray:
    """Points on the unit sphere in R^k with pairwise chord >= ``spacing``.

    k = 1 gives {+1, -1}; k = 2 the largest equally spaced circle grid.
    Higher k greedily thins a spherical-coordinate grid.
    """
    if k == 1:
        pts = np.array([[1.0], [-1.0]])
        return pts if spacing <= 2.0 else pts[:1]
    if k == 2:
        if spacing > 2.0:
            return np.array([[1.0, 0.0]])
        m = int(math.floor(math.pi / math.asin(spacing / 2.0)))
        # guard the floor against rounding right at the threshold
        while m > 1 and 2.0 * math.sin(math.pi / m) < spacing:
            m -= 1
        t = 2.0 * math.pi * np.arange(m) / m
        return np.column_stack([np.cos(t), np.sin(t)])
    step = math.asin(min(1.0, spacing / 2.0)) / 2.0
    angles = [np.arange(0.0, math.pi + 1e-12, step)] * (k - 2) + [np.arange(0.0, 2 * math.pi, step)]
    cand = []
    for ang in itertools.product(*angles):
        v = np.ones(k)
        for i, a in enumerate(ang):
            v[i] *= math.cos(a)
            v[i + 1 :] *= math.sin(a)
        cand.append(v)
    chosen: list[np.ndarray] = []
    for v in cand:
        if all(np.linalg.norm(v - c) >= spacing for c in chosen):
            chosen.append(v)
    return np.array(chosen)


def gen_euclidean_lower_bound(d: int, eps: float, copies: int = 1) -> LowerBoundInstance:
    """Two unit-sphere packings on orthogonal halves of R^d, cloned ``copies`` times.

    Every cross distance is sqrt(2) (squared length 2).
    """
    if d < 2 or d % 2:
        raise ValueError("d must be an even integer >= 2")
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 0.5)")
    if copies < 1:
        raise ValueError("copies must be >= 1")
    h = d // 2
    sph = sphere_packing(h, 4.0 * eps)
    if len(sph) < 2:
        raise ValueError(f"eps={eps} leaves fewer than two points per part")
    a = np.zeros((len(sph), d))
    a[:, :h] = sph
    b = np.zeros((len(sph), d))
    b[:, h:] = sph
    block = np.vstack([a, b])
    pts, pa, pb = [], [], []
    for c in range(copies):
        off = np.zeros(d)
        off[0] = COPY_SHIFT * c
        base = c * len(block)
        pts.append(block + off)
        pa.extend(range(base, base + len(a)))
        pb.extend(range(base + len(a), base + len(block)))
    return LowerBoundInstance(PointSet(np.vstack(pts)), np.array(pa), np.array(pb), float(eps), copies)


@dataclass
class NecessityReport:
    all_necessary: bool
    min_detour_ratio: float
    cross_edges: int
    exceptions: list[tuple[int, int, float]] = field(default_factory=list)


def verify_lower_bound_necessity(inst: LowerBoundInstance, power: float = 1.0) -> NecessityReport:
    """For each A-B edge: cheapest path in the complete graph without that edge, relative to the edge.

    The edge is necessary in every (1+eps)-spanner iff the ratio exceeds 1 + eps.
    ``power`` selects the p-power graph (1 is Euclidean).
    """
    if inst.copies != 1:
        raise ValueError("necessity is checked on single-copy instances")
    w = power_weights(inst.points, power)
    worst = math.inf
    exceptions = []
    count = 0
    for a in inst.part_a:
        for b in inst.part_b:
            count += 1
            detour = dijkstra_sssp(w, int(a), skip_edge=(int(a), int(b)))[b]
            ratio = detour / w[a, b]
            worst = min(worst, ratio)
            if not ratio > 1 + inst.eps:
                exceptions.append((int(a), int(b), float(ratio)))
    return NecessityReport(not exceptions, float(worst), count, exceptions)


@dataclass(frozen=True, eq=False)
class HTreeInstance:
    """Subdivided H-tree drawing of a complete binary tree.

    The first ``n_tree`` points are the tree nodes in heap order (children
    of i are 2i+1, 2i+2); subdivision points follow. ``tree_edges[e]`` is
    the index path of edge e from parent to child, endpoints included.
    """

    points: PointSet
    tree_edges: list[np.ndarray]
    n_tree: int
    subdivision_counts: list[int]
    depth: int

    @property
    def target(self) -> float:
        return 1.0 / (8.0 * math.log2(self.n_tree))

    def edge_costs(self) -> np.ndarray:
        """Edge-squared length of each subdivided tree edge, from raw coordinates."""
        x = self.points.coords
        return np.array([float((np.diff(x[path], axis=0) ** 2).sum()) for path in self.tree_edges])

    def tree_path_costs(self) -> np.ndarray:
        """Tree-path edge-squared cost between all pairs of logical nodes."""
        cost = self.edge_costs()
        n = self.n_tree
        # depth-first accumulation from each node over the logical tree
        adj = [[] for _ in range(n)]
        for e, path in enumerate(self.tree_edges):
            p, c = int(path[0]), int(path[-1])
            adj[p].append((c, cost[e]))
            adj[c].append((p, cost[e]))
        out = np.zeros((n, n))
        for s in range(n):
            seen = {s}
            stack = [(s, 0.0)]
            while stack:
                u, du = stack.pop()
                out[s, u] = du
                for v, c in adj[u]:
                    if v not in seen:
                        seen.add(v)
                        stack.append((v, du + c))
        return out

    def metadata(self) -> dict:
        return {
            "kind": "h-tree",
            "depth": self.depth,
            "n_tree": self.n_tree,
            "log_base": 2,
            "target_edge_cost": self.target,
            "subdivision_counts": list(self.subdivision_counts),
        }


def gen_h_tree(depth: int) -> HTreeInstance:
    """H-tree layout on the integer mesh, each edge subdivided to cost <= 1/(8 log2 n_tree).

    Edges from level t alternate horizontal/vertical with length
    ``2 ** (m - t // 2)``, ``m = (depth - 1) // 2``, so leaf edges have
    length 1 and subtrees never overlap. An edge of length l gets
    ``k = max(0, ceil(8 l^2 log2 n_tree) - 1)`` interior points, i.e.
    ``k + 1`` equal gaps and cost ``l^2 / (k + 1)``.
    """
    if not 1 <= depth <= 10:
        raise ValueError("depth must lie in [1, 10]")
    n_tree = 2 ** (depth + 1) - 1
    lg = math.log2(n_tree)
    m = (depth - 1) // 2
    pos = np.zeros((n_tree, 2))
    for i in range(1, n_tree):
        parent = (i - 1) // 2
        t = int(math.floor(math.log2(i + 1))) - 1  # level of the edge parent -> i
        length = 2.0 ** (m - t // 2)
        sign = -1.0 if i % 2 else 1.0
        step = np.array([length, 0.0]) if t % 2 == 0 else np.array([0.0, length])
        pos[i] = pos[parent] + sign * step
    extra = []
    edges = []
    counts = []
    nxt = n_tree
    for i in range(1, n_tree):
        parent = (i - 1) // 2
        length = float(np.linalg.norm(pos[i] - pos[parent]))
        k = max(0, math.ceil(8.0 * length * length * lg) - 1)
        while length * length / (k + 1) > 1.0 / (8.0 * lg):
            k += 1
        frac = np.arange(1, k + 1) / (k + 1)
        inner = pos[parent] + frac[:, None] * (pos[i] - pos[parent])
        extra.append(inner)
        edges.append(np.concatenate([[parent], np.arange(nxt, nxt + k), [i]]))
        counts.append(k)
        nxt += k
    coords = np.vstack([pos] + extra)
    return HTreeInstance(PointSet(coords), edges, n_tree, counts, depth)


@dataclass
class DoublingReport:
    radii: list[float]
    cover_sizes: list[int]  # worst greedy cover per radius
    lam: int
    dim_estimate: float
    label: str = "estimate (greedy cover, upper bound on the optimal cover)"


def greedy_cover(ball: np.ndarray, dm: np.ndarray, r: float) -> int:
    """Greedy cover of ``ball`` (point indices) by radius-r balls centred in it."""
    remaining = ball
    count = 0
    while len(remaining):
        remaining = remaining[dm[remaining[0], remaining] > r]
        count += 1
    return count


def estimate_doubling_dimension(ps: PointSet, dm: DistanceMatrix | np.ndarray, radii, centers=None) -> DoublingReport:
    """Largest greedy cover of any r-ball by r/2-balls, over the given radii and centres."""
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("radii must be non-empty")
    d = dm.values if isinstance(dm, DistanceMatrix) else np.asarray(dm)
    if d.shape != (ps.n, ps.n):
        raise ValueError("distance matrix does not match the point set")
    centers = range(ps.n) if centers is None else centers
    sizes = []
    for r in radii:
        worst = 1
        for x in centers:
            ball = np.flatnonzero(d[x] <= r)
            if len(ball) > worst:
                worst = max(worst, greedy_cover(ball, d, r / 2.0))
        sizes.append(worst)
    lam = max(sizes)
    return DoublingReport(radii, sizes, lam, math.log2(lam))
