"""Fair-split tree and well-separated pair decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PointSet


@dataclass(frozen=True, eq=False)
class SplitTree:
    """Binary space partition over a point set, stored as flat arrays.

    Node ``i`` owns ``perm[start[i]:end[i]]`` and the tight bounding box
    ``lo[i]..hi[i]``; ``left``/``right`` are -1 at leaves. Node 0 is the root.
    """

    perm: np.ndarray
    start: np.ndarray
    end: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def num_nodes(self) -> int:
        return len(self.start)

    def points(self, node: int) -> np.ndarray:
        return self.perm[self.start[node] : self.end[node]]

    def size(self, node: int) -> int:
        return int(self.end[node] - self.start[node])

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    @property
    def radius(self) -> np.ndarray:
        return 0.5 * np.sqrt(((self.hi - self.lo) ** 2).sum(axis=1))


def build_split_tree(ps: PointSet) -> SplitTree:
    """Split each box at the midpoint of its longest side until leaves are single points.

    Points on the split plane go to the lower child. A box of identical
    points (zero extent) is split by position instead.
    """
    x = ps.coords
    perm = np.arange(ps.n)
    start, end, lo, hi, left, right = [], [], [], [], [], []

    def new_node(s, e):
        pts = x[perm[s:e]]
        start.append(s)
        end.append(e)
        lo.append(pts.min(axis=0))
        hi.append(pts.max(axis=0))
        left.append(-1)
        right.append(-1)
        return len(start) - 1

    stack = [new_node(0, ps.n)]
    while stack:
        node = stack.pop()
        s, e = start[node], end[node]
        if e - s < 2:
            continue
        ext = hi[node] - lo[node]
        axis = int(np.argmax(ext))
        if ext[axis] > 0:
            idx = perm[s:e]
            mid = 0.5 * (lo[node][axis] + hi[node][axis])
            low = x[idx, axis] <= mid
            perm[s:e] = np.concatenate([idx[low], idx[~low]])
            cut = s + int(low.sum())
        else:
            cut = s + (e - s) // 2
        a = new_node(s, cut)
        b = new_node(cut, e)
        left[node], right[node] = a, b
        stack.append(b)
        stack.append(a)

    return SplitTree(
        perm,
        np.array(start),
        np.array(end),
        np.array(lo).reshape(-1, ps.dim),
        np.array(hi).reshape(-1, ps.dim),
        np.array(left),
        np.array(right),
    )


def box_distance(lo_a, hi_a, lo_b, hi_b) -> float:
    gap = np.maximum(0.0, np.maximum(lo_a - hi_b, lo_b - hi_a))
    return float(np.sqrt((gap * gap).sum()))


@dataclass(frozen=True, eq=False)
class WspdDecomposition:
    tree: SplitTree
    separation: float
    pairs: np.ndarray  # (m, 2) node ids

    def __len__(self):
        return len(self.pairs)

    def point_pairs(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.pairs[k]
        return self.tree.points(a), self.tree.points(b)


def build_wspd(tree: SplitTree, s: float) -> WspdDecomposition:
    """Callahan-Kosaraju pairing with the box-based separation test.

    Nodes ``A, B`` form a pair once ``s * max(radius) <= box distance``;
    otherwise the node with the larger box is split.
    """
    if not s > 0:
        raise ValueError(f"separation must be positive, got {s}")
    # plain floats: per-call numpy overhead dominates on tiny boxes
    rad = tree.radius.tolist()
    lo, hi = tree.lo.tolist(), tree.hi.tolist()
    left, right = tree.left.tolist(), tree.right.tolist()
    s2 = s * s
    out = []
    stack = [(left[u], right[u]) for u in range(tree.num_nodes) if left[u] >= 0]
    stack.reverse()
    while stack:
        a, b = stack.pop()
        r = rad[a] if rad[a] > rad[b] else rad[b]
        gap2 = 0.0
        for la, ha, lb, hb in zip(lo[a], hi[a], lo[b], hi[b]):
            g = la - hb if la > hb else (lb - ha if lb > ha else 0.0)
            gap2 += g * g
        if s2 * r * r <= gap2:
            out.append((a, b))
            continue
        if rad[a] < rad[b]:
            a, b = b, a
        # a is internal here: a leaf has radius 0, and two radius-0 nodes always separate
        stack.append((right[a], b))
        stack.append((left[a], b))
    return WspdDecomposition(tree, float(s), np.array(out, dtype=np.int64).reshape(-1, 2))


@dataclass
class WspdCheck:
    covered_once: bool
    separated: bool
    missing: int
    duplicated: int
    worst_separation_ratio: float


def verify_wspd(w: WspdDecomposition, ps: PointSet) -> WspdCheck:
    """Exhaustive coverage count plus separation against exact closest pairs."""
    n = ps.n
    count = np.zeros((n, n), dtype=np.int64)
    rad = w.tree.radius
    worst = 0.0
    x = ps.coords
    for k, (a, b) in enumerate(w.pairs):
        pa, pb = w.point_pairs(k)
        if np.intersect1d(pa, pb).size:
            return WspdCheck(False, False, 0, 1, np.inf)
        count[np.ix_(pa, pb)] += 1
        diff = x[pa][:, None, :] - x[pb][None, :, :]
        closest = float(np.sqrt((diff * diff).sum(axis=2).min()))
        r = max(rad[a], rad[b])
        if r > 0:
            worst = max(worst, np.inf if closest == 0 else r * w.separation / closest)
    sym = count + count.T
    iu = np.triu_indices(n, 1)
    c = sym[iu]
    return WspdCheck(
        bool(np.all(c == 1)),
        worst <= 1 + 1e-9,
        int((c == 0).sum()),
        int((c > 1).sum()),
        worst,
    )


def _grid_reps(pts: np.ndarray, idx: np.ndarray, width: float, direction: np.ndarray) -> np.ndarray:
    """One point per grid cell: the one furthest along ``direction``."""
    cells = np.floor(pts / width).astype(np.int64)
    proj = pts @ direction
    # sort by cell, then by descending projection, then by position
    order = np.lexsort((np.arange(len(pts)), -proj, *cells.T[::-1]))
    cells_sorted = cells[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = np.any(cells_sorted[1:] != cells_sorted[:-1], axis=1)
    return idx[order[first]]


def approx_closest_edge(ps: PointSet, pair, mode: str = "exact", delta: float = 0.25) -> tuple[int, int]:
    """Closest (exact) or near-closest (grid) bichromatic pair between two index sets.

    Grid mode snaps each side to cells of width ``delta * d(box A, box B)``,
    keeps per cell the point that reaches furthest towards the other side,
    and compares representatives only.
    """
    a_idx, b_idx = (np.asarray(s, dtype=np.int64) for s in pair)
    if len(a_idx) == 0 or len(b_idx) == 0:
        raise ValueError("both sides of a pair must be non-empty")
    x = ps.coords
    if mode == "grid" and len(a_idx) * len(b_idx) > 1:
        pa, pb = x[a_idx], x[b_idx]
        gap = box_distance(pa.min(0), pa.max(0), pb.min(0), pb.max(0))
        if gap > 0 and delta > 0:
            width = delta * gap
            towards = pb.mean(0) - pa.mean(0)
            towards /= np.linalg.norm(towards)
            a_idx = _grid_reps(pa, a_idx, width, towards)
            b_idx = _grid_reps(pb, b_idx, width, -towards)
    elif mode not in ("exact", "grid"):
        raise ValueError(f"unknown selection mode {mode!r}")
    diff = x[a_idx][:, None, :] - x[b_idx][None, :, :]
    sq = (diff * diff).sum(axis=2)
    i, j = np.unravel_index(int(np.argmin(sq)), sq.shape)
    return int(a_idx[i]), int(b_idx[j])
