import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import squareform

from edgesq.core import PointSet
from edgesq.metrics import edge_squared
from edgesq.persistence import (
    components_at,
    filtration_membership,
    intrinsic_cech_edges,
    nearest_distance,
    probe,
    write_edges_csv,
    zero_dim_merges,
)

from conftest import uniform


def test_nearest_distance_examples():
    ps = PointSet([[0.0], [2.0]])
    assert nearest_distance(ps, [0.5]) == 0.5
    assert nearest_distance(ps, [2.0]) == 0.0
    with pytest.raises(ValueError):
        nearest_distance(ps, [0.0, 1.0])


def test_nearest_distance_full_sort(rng):
    ps = PointSet(rng.random((500, 3)))
    for _ in range(20):
        x = rng.random(3) * 1.4 - 0.2
        want = sorted(math.dist(x, p) for p in ps.coords.tolist())[0]
        assert nearest_distance(ps, x) == pytest.approx(want, rel=1e-12)


def test_probe_is_twice_r_squared():
    p = probe(PointSet([[0.0, 0.0]]), [3.0, 4.0])
    assert p.r == 5.0 and p.dn_min == 50.0


def test_membership_examples():
    assert filtration_membership(PointSet([[1.0, 1.0]]), [1.0, 1.0], 0.0) == (True, True)
    assert filtration_membership(PointSet([[0.0]]), [1.0], 0.5) == (False, False)
    with pytest.raises(ValueError):
        filtration_membership(PointSet([[0.0]]), [1.0], -1.0)


def test_membership_agrees_on_probes(rng):
    ps = PointSet(rng.random((60, 2)))
    xs = rng.random((10_000, 2)) * 1.6 - 0.3
    alphas = rng.random(10_000) * 0.3
    for x, a in zip(xs, alphas):
        f, g = filtration_membership(ps, x, a)
        assert f == g


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_membership_boundary(alpha, x, y):
    f, g = filtration_membership(PointSet([[0.0, 0.0], [1.0, 2.0]]), [x, y], alpha)
    assert f == g


def test_cech_examples():
    assert intrinsic_cech_edges(PointSet([[0.0, 0.0], [1.0, 1.0]])) == [(0, 1, 1.0)]
    assert intrinsic_cech_edges(PointSet([[0.0], [1.0], [2.0]])) == [(0, 1, 0.5), (1, 2, 0.5), (0, 2, 1.0)]


@pytest.mark.parametrize("seed", range(3))
def test_cech_births_half_metric(seed):
    ps = uniform(50, 2, seed)
    d2 = edge_squared(ps).values
    edges = intrinsic_cech_edges(ps)
    assert len(edges) == 50 * 49 // 2
    for u, v, b in edges:
        assert b == d2[u, v] / 2
    keys = [(b, u, v) for u, v, b in edges]
    assert keys == sorted(keys)


def test_births_shrink_under_insertion(rng):
    x = rng.random((30, 2))
    before = {(u, v): b for u, v, b in intrinsic_cech_edges(PointSet(x))}
    after = {(u, v): b for u, v, b in intrinsic_cech_edges(PointSet(np.vstack([x, rng.random((5, 2))])))}
    assert all(after[e] <= b * (1 + 1e-12) for e, b in before.items())


@pytest.mark.parametrize("seed", range(3))
def test_merges_equal_single_linkage(seed):
    ps = uniform(40, 2, seed)
    d2 = edge_squared(ps).values
    edges = intrinsic_cech_edges(ps)
    merges = zero_dim_merges(ps.n, edges)
    assert len(merges) == ps.n - 1
    z = linkage(squareform(d2 / 2, checks=False), method="single")
    np.testing.assert_allclose([m[0] for m in merges], z[:, 2], rtol=1e-12)
    # partitions agree at every merge height
    for h in z[:, 2]:
        assert same_partition(components_at(ps.n, edges, h), fcluster(z, h, "distance"))


def same_partition(a, b):
    pairs = {}
    for x, y in zip(a.tolist(), b.tolist()):
        if pairs.setdefault(x, y) != y:
            return False
    return len(set(pairs.values())) == len(pairs)


def test_components_at():
    edges = [(0, 2, 1.0), (0, 1, 0.5), (1, 2, 0.5)]
    assert len(set(components_at(4, edges, 0.4).tolist())) == 4
    assert len(set(components_at(4, edges, 0.5).tolist())) == 2


def test_edges_csv():
    buf = io.StringIO()
    write_edges_csv([(0, 1, 0.5), (1, 2, 0.5)], buf)
    assert buf.getvalue().splitlines() == ["u,v,birth", "0,1,0.5", "1,2,0.5"]
