"""Self-consistent routing under the cumulative-betweenness metric.

A route's length is the sum of ``B_cum`` over its forwarding nodes (sender
included, recipient excluded).  Since ``B_cum`` itself depends on the routes,
the two are updated alternately: nodes are visited one after another, each
recomputes its own outgoing routes with the current weights, and the loads are
patched immediately so the next node already sees them.  Only the visited
sender's share of ``B`` changes, so the update subtracts its old route tree and
adds the new one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from adhocnet import _kernels
from adhocnet.errors import InvalidParameterError, RouteNotComputedError
from adhocnet.geomnet import LinkGraph
from adhocnet.paths import CentralityVector, RouteTable, metric_routes_from


@dataclass
class MetricRoutingState:
    net: LinkGraph
    routes: RouteTable
    B: np.ndarray
    B_cum: np.ndarray
    iteration_round: int = 0
    node_order: list[np.ndarray] = field(default_factory=list)
    # weights each sender used for its most recent route computation
    weights_used: np.ndarray | None = None

    @property
    def centrality(self) -> CentralityVector:
        return CentralityVector(self.B.astype(float), self.B_cum.astype(float))

    def throughput(self) -> float:
        n = self.net.n
        return n * (n - 1) / float(self.B_cum.max())


def init_state(net: LinkGraph) -> MetricRoutingState:
    """Unit weights everywhere and no routes yet."""
    n = net.n
    indptr, indices = net.bidirected_csr()
    routes = RouteTable("single", np.full((n, n), np.inf), pred=np.full((n, n), -1, dtype=np.int64),
                        indptr=indptr, indices=indices, computed=np.zeros(n, dtype=bool))
    return MetricRoutingState(net, routes, np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64),
                              weights_used=np.zeros((n, n)))


def update_sender(state: MetricRoutingState, i: int, in_csr=None) -> None:
    """Recompute sender ``i``'s routes and patch ``B`` and ``B_cum``."""
    rt = state.routes
    n = state.net.n
    all_dst = np.ones(n, dtype=np.bool_)
    weights = state.B_cum.astype(float)
    dist, pred = metric_routes_from(state.net, i, weights, (rt.indptr, rt.indices))
    if rt.computed[i]:
        _kernels.add_tree_contribution(rt.pred[i], i, all_dst, state.B, -1)
    _kernels.add_tree_contribution(pred, i, all_dst, state.B, 1)
    rt.pred[i] = pred
    rt.dist[i] = dist
    rt.computed[i] = True
    state.weights_used[i] = weights
    in_indptr, in_indices = in_csr if in_csr is not None else state.net.in_csr()
    state.B_cum = _kernels.in_neighbor_sum(in_indptr, in_indices, state.B)


def run_iterations(state: MetricRoutingState, rounds: int = 2, order: str = "ascending",
                   seed: int | None = None,
                   on_update: Callable[[MetricRoutingState, int], None] | None = None
                   ) -> MetricRoutingState:
    """Run ``rounds`` full passes over all senders, updating ``state`` in place.

    ``order`` is ``"ascending"`` (node id order) or ``"random"`` (a fresh
    seeded permutation per round).  ``on_update`` is called after every
    sender's update, when routes and loads are consistent.
    """
    if rounds < 1:
        raise InvalidParameterError("rounds must be at least 1")
    if order not in ("ascending", "random"):
        raise InvalidParameterError(f"unknown node order {order!r}")
    rng = np.random.default_rng(seed)
    n = state.net.n
    in_csr = state.net.in_csr()
    for _ in range(rounds):
        seq = np.arange(n) if order == "ascending" else rng.permutation(n)
        state.node_order.append(seq)
        for i in seq:
            update_sender(state, int(i), in_csr)
            if on_update is not None:
                on_update(state, int(i))
        state.iteration_round += 1
    return state


def metric_routing(net: LinkGraph, rounds: int = 2, order: str = "ascending",
                   seed: int | None = None) -> MetricRoutingState:
    return run_iterations(init_state(net), rounds, order, seed)


def route_length(state: MetricRoutingState, i: int, f: int, weights=None) -> float:
    """Summed ``B_cum`` over the forwarding nodes of the stored route ``i -> f``.

    Uses the current loads unless ``weights`` is given.
    """
    rt = state.routes
    if not rt.has_route(i, f):
        raise RouteNotComputedError((i, f))
    w = state.B_cum if weights is None else weights
    return float(sum(w[k] for k in rt.route(i, f)[:-1]))


def write_routes(state: MetricRoutingState, path) -> None:
    """One line per ordered pair: sender, recipient, node sequence."""
    rt = state.routes
    n = state.net.n
    with open(path, "w", encoding="utf-8") as fh:
        for s in range(n):
            for f in range(n):
                if s != f and rt.has_route(s, f):
                    fh.write(f"{s} {f} {' '.join(map(str, rt.route(s, f)))}\n")


def read_routes(path, n: int) -> RouteTable:
    pred = np.full((n, n), -1, dtype=np.int64)
    computed = np.zeros(n, dtype=bool)
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = [int(x) for x in line.split()]
            s, seq = parts[0], parts[2:]
            computed[s] = True
            for a, b in zip(seq, seq[1:]):
                pred[s, b] = a
    dist = np.where(pred >= 0, 0.0, np.inf)
    return RouteTable("single", dist, pred=pred, computed=computed)
