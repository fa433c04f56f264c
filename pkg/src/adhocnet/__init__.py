"""Throughput estimation, topology optimization and routing for wireless multihop ad hoc networks."""

from adhocnet.geomnet import (
    AdHocNetwork,
    LinkGraph,
    RadioParams,
    SpatialLayout,
    build_min_degree_network,
    generate_layout,
    is_strongly_connected,
    step_down,
    step_up,
)
from adhocnet.paths import (
    CentralityVector,
    RouteTable,
    betweenness,
    cumulative_betweenness,
    hopcount_routes,
    metric_routes_from,
)
from adhocnet.capacity import (
    ThroughputEstimate,
    critical_rates,
    estimate_throughput,
    rejected_ansatz_throughput,
    sending_time,
)

__version__ = "0.1.0"

__all__ = [
    "AdHocNetwork",
    "LinkGraph",
    "RadioParams",
    "SpatialLayout",
    "build_min_degree_network",
    "generate_layout",
    "is_strongly_connected",
    "step_down",
    "step_up",
    "CentralityVector",
    "RouteTable",
    "betweenness",
    "cumulative_betweenness",
    "hopcount_routes",
    "metric_routes_from",
    "ThroughputEstimate",
    "critical_rates",
    "estimate_throughput",
    "rejected_ansatz_throughput",
    "sending_time",
]
