import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgesq.core import (
    DistanceMatrix,
    ExperimentReport,
    FormatError,
    MetricParams,
    PointSet,
    WeightedGraph,
    euclidean,
    load_graph,
    load_points,
    save_graph,
    save_points,
)


def test_load_csv():
    ps = load_points(io.BytesIO(b"x0,x1\n0,0\n1,0"), "csv")
    assert ps.dim == 2
    assert ps.coords.tolist() == [[0.0, 0.0], [1.0, 0.0]]


def test_load_json_keeps_row_order():
    ps = load_points('{"dim":1,"points":[[0],[3],[1]]}', "json")
    assert ps.n == 3 and ps.dim == 1
    assert ps.coords.ravel().tolist() == [0.0, 3.0, 1.0]


@pytest.mark.parametrize(
    "text, row",
    [
        ("x0,x1\n0,0\n1,NaN\n", 3),
        ("x0,x1\n1,NaN\n", 2),
        ("x0,x1\n0,0\n1\n", 3),
        ("x0,x1\n0,inf\n", 2),
        ("x0,x1\n0,abc\n", 2),
    ],
)
def test_load_csv_rejects_bad_rows(text, row):
    with pytest.raises(FormatError, match=f"row {row}"):
        load_points(text, "csv")


def test_load_rejects_bad_header_and_empty():
    with pytest.raises(FormatError):
        load_points("a,b\n0,0\n", "csv")
    with pytest.raises(FormatError):
        load_points("x0\n", "csv")
    with pytest.raises(FormatError):
        load_points('{"dim":2,"points":[[0]]}', "json")


def test_pointset_invariants():
    with pytest.raises(ValueError):
        PointSet(np.zeros((0, 2)))
    with pytest.raises(ValueError):
        PointSet([[0.0, np.nan]])
    ps = PointSet([[0.0, 1.0]])
    with pytest.raises(ValueError):
        ps.coords[0, 0] = 5.0


def test_points_json_round_trip_is_bit_exact(rng):
    x = rng.standard_normal((50, 3)) * 10.0 ** rng.integers(-8, 8, size=(50, 3))
    ps = PointSet(x)
    for fmt in ("json", "csv"):
        buf = io.StringIO()
        save_points(ps, buf, fmt)
        back = load_points(buf.getvalue(), fmt)
        assert np.array_equal(back.coords, ps.coords)


def test_graph_canonical_form():
    g = WeightedGraph.from_edges(4, [(2, 1, 3.0), (0, 3, 1.0), (1, 2, 2.0)])
    assert g.edges() == [(0, 3, 1.0), (1, 2, 2.0)]
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(2, [(1, 1, 0.0)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(2, [(0, 2, 1.0)])
    with pytest.raises(ValueError):
        WeightedGraph.from_edges(2, [(0, 1, -1.0)])


def test_save_graph_examples():
    buf = io.StringIO()
    save_graph(WeightedGraph.from_edges(2, [(0, 1, 2.0)]), buf)
    assert json.loads(buf.getvalue()) == {"n": 2, "edges": [[0, 1, 2.0]]}
    buf = io.StringIO()
    save_graph(WeightedGraph(5, [], [], []), buf)
    assert json.loads(buf.getvalue()) == {"n": 5, "edges": []}


def test_graph_round_trip_random(rng):
    n = 40
    pairs = rng.integers(0, n, size=(200, 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    w = rng.random(len(pairs)) * 1e3
    g = WeightedGraph(n, pairs[:, 0], pairs[:, 1], w)
    buf = io.StringIO()
    save_graph(g, buf)
    back = load_graph(buf.getvalue())
    assert back == g
    doc = json.loads(buf.getvalue())
    keys = [(e[0], e[1]) for e in doc["edges"]]
    assert keys == sorted(keys)


def test_euclidean_examples(rng):
    assert euclidean((0, 0), (3, 4)) == 5.0
    a = rng.random(5)
    assert euclidean(a, a) == 0.0
    for _ in range(20):
        a, b = rng.random(4), rng.random(4)
        assert euclidean(a, b) ** 2 == pytest.approx(sum((a - b) ** 2), rel=1e-12)
    with pytest.raises(ValueError):
        euclidean((0, 0), (0, 0, 0))


coords = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(coords, coords, coords)
def test_euclidean_triangle_inequality(a, b, c):
    ab, ac, cb = euclidean(a, b), euclidean(a, c), euclidean(c, b)
    assert ab <= (ac + cb) * (1 + 1e-9) + 1e-12


def test_metric_params_validation():
    assert MetricParams().p == 2
    MetricParams(math.inf, True)
    with pytest.raises(ValueError):
        MetricParams(0.5)
    with pytest.raises(ValueError):
        MetricParams(math.inf, False)


def test_distance_matrix_csv_and_checks():
    d = DistanceMatrix([[0.0, 1.0], [1.0, 0.0]])
    assert d.is_symmetric()
    assert d.triangle_violation() <= 0
    buf = io.StringIO()
    d.to_csv(buf)
    assert buf.getvalue() == "0.0,1.0\n1.0,0.0\n"
    assert DistanceMatrix([[0, 5.0, 1.0], [5.0, 0, 1.0], [1.0, 1.0, 0]]).triangle_violation() > 0


def test_experiment_report_dump_is_stable():
    rep = ExperimentReport({"b": 1, "a": 2}, [{"x": 1}], {"ok": True})
    a, b = io.StringIO(), io.StringIO()
    rep.dump(a)
    rep.dump(b)
    assert a.getvalue() == b.getvalue()
    assert json.loads(a.getvalue())["config"] == {"a": 2, "b": 1}
