"""Edge-squared and p-power metrics on Euclidean point sets, with spanners and verifiers."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    INFINITY,
    DistanceMatrix,
    ExperimentReport,
    MetricParams,
    PointSet,
    WeightedGraph,
    euclidean,
    load_graph,
    load_points,
    save_graph,
    save_points,
)
from .metrics import edge_squared, minimax_distance, power_metric, stretch  # noqa: E402

__all__ = [
    "INFINITY",
    "DistanceMatrix",
    "ExperimentReport",
    "MetricParams",
    "PointSet",
    "WeightedGraph",
    "edge_squared",
    "euclidean",
    "load_graph",
    "load_points",
    "minimax_distance",
    "power_metric",
    "save_graph",
    "save_points",
    "stretch",
]
