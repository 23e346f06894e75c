import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from edgesq.core import MetricParams, PointSet
from edgesq.metrics import edge_squared, graph_closure, power_metric
from edgesq.proximity import critical_edges, euclidean_mst, gabriel_graph, knn_graph, knn_order

from conftest import uniform


def brute_gabriel(x):
    n = len(x)
    out = set()
    for i in range(n):
        for j in range(i + 1, n):
            ab2 = sum((a - b) ** 2 for a, b in zip(x[i], x[j]))
            blocked = False
            for w in range(n):
                if w in (i, j):
                    continue
                dot = sum((a - c) * (b - c) for a, b, c in zip(x[i], x[j], x[w]))
                if dot <= -1e-12 * ab2:
                    blocked = True
                    break
            if not blocked:
                out.add((i, j))
    return out


def kruskal_weight(x):
    n = len(x)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            a = parent[a]
        return a

    total = 0.0
    for w, i, j in sorted((math.dist(x[i], x[j]), i, j) for i in range(n) for j in range(i + 1, n)):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            total += w
    return total


def removal_critical(ps, p, strict):
    """Delete each edge in turn and rerun scipy Dijkstra on the rest."""
    w = ps.dists() ** p
    out = set()
    for i in range(ps.n):
        for j in range(i + 1, ps.n):
            # sparse input: scipy masks dense entries within 1e-8 of zero
            keep = ~np.eye(ps.n, dtype=bool)
            keep[i, j] = keep[j, i] = False
            r, c = np.nonzero(keep)
            m = csr_matrix((w[r, c], (r, c)), shape=w.shape)
            d = shortest_path(m, method="D", directed=False, indices=[i])[0, j]
            if (d > w[i, j] * (1 + 1e-9)) if strict else (d >= w[i, j] * (1 - 1e-9)):
                out.add((i, j))
    return out


# ---------------------------------------------------------------- kNN


def test_knn_line():
    g = knn_graph(PointSet([[0.0], [1.0], [2.0]]), 1)
    assert g.edges() == [(0, 1, 1.0), (1, 2, 1.0)]


def test_knn_complete_and_bounds(rng):
    ps = PointSet(rng.random((12, 2)))
    g = knn_graph(ps, ps.n - 1)
    assert g.m == ps.n * (ps.n - 1) // 2
    np.testing.assert_allclose(graph_closure(g), edge_squared(ps).values, rtol=1e-12)
    for k in (0, ps.n):
        with pytest.raises(ValueError):
            knn_graph(ps, k)


def test_knn_matches_full_sort(rng):
    ps = PointSet(rng.random((200, 2)))
    k = 5
    g = knn_graph(ps, k)
    assert g.degrees().min() >= k
    x = ps.coords.tolist()
    want = set()
    for i in range(ps.n):
        others = sorted((j for j in range(ps.n) if j != i), key=lambda j: (math.dist(x[i], x[j]), j))
        want |= {(min(i, j), max(i, j)) for j in others[:k]}
    assert g.edge_set() == want


def test_knn_order_ties_by_index():
    ps = PointSet([[0.0], [1.0], [-1.0], [2.0]])
    assert knn_order(ps)[0].tolist() == [1, 2, 3]


def test_knn_weight_power():
    g = knn_graph(PointSet([[0.0], [3.0]]), 1, weight_power=1.0)
    assert g.edges() == [(0, 1, 3.0)]


# ---------------------------------------------------------------- Gabriel


def test_gabriel_triangle():
    g = gabriel_graph(PointSet([[0.0, 0.0], [2.0, 0.0], [1.0, 0.5]]))
    assert g.edge_set() == {(0, 2), (1, 2)}


def test_gabriel_two_points_and_square():
    assert gabriel_graph(PointSet([[0.0], [1.0]])).edges() == [(0, 1, 1.0)]
    sq = gabriel_graph(PointSet([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    assert sq.m == 6
    with pytest.raises(ValueError):
        gabriel_graph(PointSet([[0.0]]))


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("d", [2, 3])
def test_gabriel_matches_triple_loop(seed, d):
    ps = uniform(60, d, seed)
    assert gabriel_graph(ps).edge_set() == brute_gabriel(ps.coords.tolist())


def test_gabriel_prefilter_is_exact():
    ps = uniform(300, 2, 11)
    assert gabriel_graph(ps, prefilter=8).edge_set() == gabriel_graph(ps, prefilter=0).edge_set()


@pytest.mark.parametrize("seed", range(3))
def test_gabriel_is_one_spanner(seed):
    ps = uniform(150, 2, seed)
    np.testing.assert_allclose(graph_closure(gabriel_graph(ps)), edge_squared(ps).values, rtol=1e-9)


# ---------------------------------------------------------------- MST


def test_mst_examples():
    assert euclidean_mst(PointSet([[0.0], [1.0], [3.0]])).edges() == [(0, 1, 1.0), (1, 2, 2.0)]
    assert euclidean_mst(PointSet([[5.0]])).m == 0


@pytest.mark.parametrize("seed", range(3))
def test_mst_weight_matches_kruskal(seed):
    ps = uniform(100, 2, seed)
    g = euclidean_mst(ps)
    assert g.m == ps.n - 1
    assert float(g.w.sum()) == pytest.approx(kruskal_weight(ps.coords.tolist()), rel=1e-9)


# ---------------------------------------------------------------- critical edges


def test_critical_examples():
    assert critical_edges(PointSet([[0.0], [4.0]])).edge_set() == {(0, 1)}
    c = critical_edges(PointSet([[0.0], [1.0], [2.0]]), p=2)
    assert c.edge_set() == {(0, 1), (1, 2)}
    # p = 1 on the line: the detour ties with the direct edge
    line = PointSet([[0.0], [1.0], [2.0]])
    assert (0, 2) not in critical_edges(line, 1.0, strict=True).edge_set()
    assert (0, 2) in critical_edges(line, 1.0, strict=False).edge_set()
    with pytest.raises(ValueError):
        critical_edges(line, 0.5)


@pytest.mark.parametrize("p", [1.0, 2.0, 4.0])
@pytest.mark.parametrize("strict", [True, False])
def test_critical_matches_edge_removal(p, strict):
    ps = uniform(35, 2, int(p) * 7 + strict)
    assert critical_edges(ps, p, strict).edge_set() == removal_critical(ps, p, strict)


def test_critical_random_100():
    ps = uniform(100, 2, 21)
    d2 = edge_squared(ps, "floyd").values
    sq = ps.sq_dists()
    tight = np.isclose(d2, sq, rtol=1e-9, atol=0)
    two_hop = (sq[:, :, None] + sq[None, :, :])
    # no 2-hop tie: no w with |uw|^2 + |wv|^2 within 1e-9 of |uv|^2
    iu = np.argwhere(np.triu(tight, 1))
    want = set()
    for u, v in iu:
        alt = two_hop[u, :, v].copy()
        alt[[u, v]] = np.inf
        if alt.min() > sq[u, v] * (1 + 1e-9):
            want.add((int(u), int(v)))
    assert critical_edges(ps, 2.0).edge_set() == want


clouds = arrays(
    np.float64,
    st.tuples(st.integers(2, 14), st.integers(1, 3)),
    elements=st.floats(-5, 5, allow_nan=False, width=16),
)


@settings(max_examples=60, deadline=None)
@given(clouds)
def test_containment_chain(x):
    ps = PointSet(x)
    gab = gabriel_graph(ps).edge_set()
    strict = {p: critical_edges(ps, p, True).edge_set() for p in (1.0, 2.0, 4.0)}
    assert strict[2.0] <= gab
    assert strict[4.0] <= strict[2.0]
    assert strict[2.0] <= strict[1.0]
    mst = euclidean_mst(ps).edge_set()
    for p in (1.0, 2.0, 4.0):
        assert mst <= critical_edges(ps, p, False).edge_set()


def test_mst_strict_critical_in_general_position():
    ps = uniform(80, 2, 4)
    assert euclidean_mst(ps).edge_set() <= critical_edges(ps, 2.0, True).edge_set()


def test_precomputed_metric_is_used():
    ps = uniform(30, 2, 2)
    dp = power_metric(ps, MetricParams(3.0))
    assert critical_edges(ps, 3.0, dp=dp).edge_set() == critical_edges(ps, 3.0).edge_set()
