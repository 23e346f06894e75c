"""Point sets, weighted graphs, metric parameters and their file formats."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

log = logging.getLogger(__name__)

RTOL = 1e-9

INFINITY = math.inf


class FormatError(ValueError):
    """Raised when a points or graph file cannot be parsed."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PointSet:
    """Ordered, immutable collection of ``n`` points in ``dim`` dimensions.

    Points are addressed by their row index; duplicates are allowed.
    """

    coords: np.ndarray

    def __post_init__(self):
        a = np.array(self.coords, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"expected a non-empty (n, d) array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(a), axis=1))[0])
            raise ValueError(f"point {bad} has a non-finite coordinate")
        object.__setattr__(self, "coords", _frozen(a))
        if self.n > 1 and len(np.unique(a, axis=0)) < self.n:
            log.warning("point set contains duplicate coordinates")

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.coords[i]

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return self.coords.shape == other.coords.shape and bool(np.array_equal(self.coords, other.coords))

    __hash__ = None

    def sq_dists(self) -> np.ndarray:
        """Full matrix of squared Euclidean distances (exactly zero on the diagonal)."""
        x = self.coords
        diff = x[:, None, :] - x[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)

    def dists(self) -> np.ndarray:
        return np.sqrt(self.sq_dists())


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected graph on vertices ``0..n-1``.

    Edges are stored canonically (``u < v``), deduplicated and sorted by
    ``(u, v)``. When the same pair is given twice the smaller weight wins.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.int64).ravel()
        v = np.asarray(self.v, dtype=np.int64).ravel()
        w = np.asarray(self.w, dtype=np.float64).ravel()
        if not (len(u) == len(v) == len(w)):
            raise ValueError("edge arrays differ in length")
        if self.n < 0:
            raise ValueError("negative vertex count")
        if len(u):
            if u.min() < 0 or v.min() < 0 or max(u.max(), v.max()) >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(u == v):
                raise ValueError("self-loops are not allowed")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("edge weights must be finite and nonnegative")
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        order = np.lexsort((w, hi, lo))
        lo, hi, w = lo[order], hi[order], w[order]
        if len(lo):
            keep = np.ones(len(lo), dtype=bool)
            keep[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
            lo, hi, w = lo[keep], hi[keep], w[keep]
        object.__setattr__(self, "u", _frozen(lo))
        object.__setattr__(self, "v", _frozen(hi))
        object.__setattr__(self, "w", _frozen(w))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]]) -> "WeightedGraph":
        edges = list(edges)
        if not edges:
            return cls(n, [], [], [])
        u, v, w = zip(*edges)
        return cls(n, u, v, w)

    @classmethod
    def from_pairs(cls, ps: PointSet, pairs, power: float = 2.0) -> "WeightedGraph":
        """Edges between point pairs, weighted by Euclidean length to ``power``."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        diff = ps.coords[pairs[:, 0]] - ps.coords[pairs[:, 1]]
        sq = np.einsum("ij,ij->i", diff, diff)
        w = sq if power == 2 else np.sqrt(sq) ** power
        return cls(ps.n, pairs[:, 0], pairs[:, 1], w)

    @property
    def m(self) -> int:
        return len(self.u)

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for a, b, c in zip(self.u, self.v, self.w)]

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.u.tolist(), self.v.tolist()))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.u, minlength=self.n) + np.bincount(self.v, minlength=self.n)

    def to_sparse(self):
        from scipy.sparse import csr_matrix

        # zero-weight edges would vanish from a sparse matrix; a tiny positive
        # stand-in keeps them as edges without moving any path cost above 1e-300
        w = np.where(self.w > 0, self.w, 1e-300)
        return csr_matrix((w, (self.u, self.v)), shape=(self.n, self.n))

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.v, other.v)
            and np.array_equal(self.w, other.w)
        )

    __hash__ = None


@dataclass(frozen=True)
class MetricParams:
    """Selects the p-power metric (``normalized`` raises path costs to 1/p).

    ``p = INFINITY`` is only meaningful together with ``normalized=True``
    and denotes the minimax (bottleneck) distance.
    """

    p: float = 2.0
    normalized: bool = False

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"metric exponent must be >= 1, got {self.p}")
        if math.isinf(self.p) and not self.normalized:
            raise ValueError("p = infinity requires normalized=True")


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    values: np.ndarray
    params: MetricParams | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.array(self.values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("distance matrix must be square")
        object.__setattr__(self, "values", _frozen(a))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, ij):
        return self.values[ij]

    def is_symmetric(self, rtol: float = RTOL) -> bool:
        a = self.values
        return bool(np.allclose(a, a.T, rtol=rtol, atol=0.0))

    def triangle_violation(self) -> float:
        """Largest relative excess ``D[i,j] - (D[i,k] + D[k,j])`` over all triples."""
        a = self.values
        scale = max(float(a.max()), 1e-300) if a.size else 1.0
        worst = 0.0
        for k in range(self.n):
            excess = a - (a[:, k, None] + a[None, k, :])
            worst = max(worst, float(excess.max()))
        return worst / scale

    def to_csv(self, sink: IO[str]) -> None:
        for row in self.values:
            sink.write(",".join(repr(float(x)) for x in row))
            sink.write("\n")


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(math.sqrt(float(np.dot(a - b, a - b))))


# --------------------------------------------------------------------------
# IO
# --------------------------------------------------------------------------


def _text(source) -> str:
    data = source.read() if hasattr(source, "read") else source
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    return data


def _parse_float(tok: str, row: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise FormatError(f"row {row}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(x):
        raise FormatError(f"row {row}: non-finite value {tok!r}")
    return x


def load_points(source, format: str = "csv") -> PointSet:
    """Read a point set from a text/byte stream (or a string) in csv or json format.

    Row numbers in error messages count the CSV header as row 1.
    """
    text = _text(source)
    if format == "csv":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if not rows:
            raise FormatError("empty points file")
        header = [c.strip() for c in rows[0]]
        dim = len(header)
        if header != [f"x{i}" for i in range(dim)]:
            raise FormatError(f"row 1: expected header x0..x{dim - 1}, got {rows[0]}")
        pts = []
        for lineno, r in enumerate(rows[1:], start=2):
            if len(r) != dim:
                raise FormatError(f"row {lineno}: expected {dim} values, got {len(r)}")
            pts.append([_parse_float(c.strip(), lineno) for c in r])
    elif format == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON: {e}") from None
        if not isinstance(doc, dict) or "dim" not in doc or "points" not in doc:
            raise FormatError("points JSON needs 'dim' and 'points'")
        dim = doc["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise FormatError(f"invalid dim {dim!r}")
        pts = []
        for i, p in enumerate(doc["points"], start=1):
            if not isinstance(p, list) or len(p) != dim:
                raise FormatError(f"row {i}: expected {dim} coordinates")
            pts.append([_parse_float(str(c), i) for c in p])
    else:
        raise ValueError(f"unknown points format {format!r}")
    if not pts:
        raise FormatError("point set is empty")
    return PointSet(np.array(pts, dtype=np.float64).reshape(len(pts), dim))


def save_points(ps: PointSet, sink: IO[str], format: str = "csv") -> None:
    if format == "csv":
        sink.write(",".join(f"x{i}" for i in range(ps.dim)) + "\n")
        for row in ps.coords:
            sink.write(",".join(repr(float(x)) for x in row) + "\n")
    elif format == "json":
        json.dump({"dim": ps.dim, "points": ps.coords.tolist()}, sink)
        sink.write("\n")
    else:
        raise ValueError(f"unknown points format {format!r}")


def save_graph(g: WeightedGraph, sink: IO[str]) -> None:
    # json uses repr() for floats, the shortest round-tripping decimal
    doc = {"n": int(g.n), "edges": [[a, b, c] for a, b, c in g.edges()]}
    json.dump(doc, sink)
    sink.write("\n")


def load_graph(source) -> WeightedGraph:
    try:
        doc = json.loads(_text(source))
        n = int(doc["n"])
        edges = [(int(e[0]), int(e[1]), float(e[2])) for e in doc["edges"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as e:
        raise FormatError(f"invalid graph JSON: {e}") from None
    return WeightedGraph.from_edges(n, edges)


@dataclass
class ExperimentReport:
    """Config, per-trial rows and summary of a statistical run; JSON-serialisable."""

    config: dict
    per_trial: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"config": self.config, "per_trial": self.per_trial, "summary": self.summary}

    def dump(self, sink: IO[str]) -> None:
        json.dump(self.to_dict(), sink, indent=2, sort_keys=True)
        sink.write("\n")
