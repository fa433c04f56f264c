"""Route tables and betweenness centrality.

Betweenness counts, for every node, the end-to-end routes on which it has to
forward a packet: the initial sender is counted, the final recipient is not.
Two route modes exist.  ``"dag"`` keeps every shortest hop-count path and
splits each ordered pair fractionally over them; ``"single"`` stores exactly
one explicit route per ordered pair as a predecessor tree per sender.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from adhocnet import _kernels
from adhocnet.errors import InvalidParameterError, RouteNotComputedError, UnreachablePairError
from adhocnet.geomnet import LinkGraph


@dataclass
class RouteTable:
    mode: str
    dist: np.ndarray
    sigma: np.ndarray | None = None
    pred: np.ndarray | None = None
    indptr: np.ndarray | None = None
    indices: np.ndarray | None = None
    computed: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def path_count(self, m: int, n: int) -> float:
        """Number ``b_mn`` of used routes from ``m`` to ``n``."""
        if self.mode == "single":
            return 1.0 if m != n and self.has_route(m, n) else 0.0
        return float(self.sigma[m, n])

    def predecessors(self, source: int, node: int) -> list[int]:
        if self.mode == "single":
            p = int(self.pred[source, node])
            return [] if p < 0 else [p]
        d = self.dist[source]
        nb = self.indices[self.indptr[node]:self.indptr[node + 1]]
        return [int(v) for v in nb if d[v] == d[node] - 1 and d[node] > 0]

    def has_route(self, m: int, n: int) -> bool:
        if self.mode == "single":
            return bool(self.computed[m]) and (m == n or self.pred[m, n] >= 0)
        return self.dist[m, n] >= 0

    def route(self, m: int, n: int) -> list[int]:
        """The single route ``m -> n`` (dag mode: smallest-id predecessors)."""
        if not self.has_route(m, n):
            raise RouteNotComputedError((m, n))
        seq = [n]
        while seq[-1] != m:
            seq.append(min(self.predecessors(m, seq[-1])))
        return seq[::-1]

    def hops(self, m: int, n: int) -> int:
        if self.mode == "dag":
            return int(self.dist[m, n])
        return len(self.route(m, n)) - 1

    def to_single(self) -> "RouteTable":
        """Materialize one route per pair, breaking ties towards smaller ids."""
        if self.mode == "single":
            return self
        pred = _kernels.dag_to_single(self.indptr, self.indices, self.dist)
        return RouteTable("single", self.dist.astype(float), pred=pred,
                          indptr=self.indptr, indices=self.indices,
                          computed=np.ones(self.n, dtype=bool))


@dataclass
class CentralityVector:
    B: np.ndarray
    B_cum: np.ndarray | None = None
    n_traffic: int | None = None

    def __post_init__(self):
        if self.n_traffic is None:
            self.n_traffic = len(self.B)


def _masks(n: int, endpoints) -> tuple[np.ndarray, np.ndarray]:
    if endpoints is None:
        mask = np.ones(n, dtype=np.bool_)
    else:
        mask = np.zeros(n, dtype=np.bool_)
        mask[np.asarray(endpoints, dtype=np.int64)] = True
    return mask, mask


def hopcount_routes(net: LinkGraph) -> RouteTable:
    """All shortest hop-count routes over bidirected links, for every sender."""
    indptr, indices = net.bidirected_csr()
    dist, sigma = _kernels.all_pairs_bfs(indptr, indices)
    bad = np.argwhere(dist < 0)
    if len(bad):
        s, t = bad[0]
        raise UnreachablePairError(int(s), int(t))
    return RouteTable("dag", dist, sigma=sigma, indptr=indptr, indices=indices)


def betweenness(net: LinkGraph, routes: RouteTable, endpoints=None) -> CentralityVector:
    """Betweenness ``B_i`` from a route table.

    ``endpoints`` restricts which nodes send and receive traffic (default:
    all).  Senders are counted on their own routes, recipients are not.
    """
    n = net.n
    src, dst = _masks(n, endpoints)
    if routes.mode == "dag":
        B = _kernels.dag_accumulate(routes.indptr, routes.indices, routes.dist,
                                    routes.sigma, src, dst)
    else:
        if not routes.computed[src].all():
            raise RouteNotComputedError("route table lacks some senders")
        B = _kernels.single_route_betweenness(routes.pred, src, dst).astype(float)
    return CentralityVector(B, n_traffic=int(src.sum()))


def cumulative_betweenness(net: LinkGraph, cv: CentralityVector) -> CentralityVector:
    """Add to every ``B_i`` the betweenness of all nodes with a link towards ``i``."""
    in_indptr, in_indices = net.in_csr()
    b_cum = _kernels.in_neighbor_sum(in_indptr, in_indices, np.asarray(cv.B, dtype=float))
    return CentralityVector(cv.B, b_cum, cv.n_traffic)


def hopcount_centrality(net: LinkGraph, endpoints=None) -> CentralityVector:
    """Shortest-path ``B`` and ``B_cum`` in one fused pass (no route table kept)."""
    indptr, indices = net.bidirected_csr()
    src, dst = _masks(net.n, endpoints)
    B, bad = _kernels.brandes_hopcount(indptr, indices, src, dst)
    if bad >= 0:
        dist, _ = _kernels.all_pairs_bfs(indptr, indices)
        t = int(np.flatnonzero((dist[bad] < 0) & dst)[0])
        raise UnreachablePairError(int(bad), t)
    return cumulative_betweenness(net, CentralityVector(B, n_traffic=int(src.sum())))


def metric_routes_from(net: LinkGraph, source: int, weights, csr=None):
    """Routes from ``source`` minimizing the summed weight of forwarding nodes.

    Returns ``(dist, pred)`` rows: ``dist[f]`` is the route length towards
    ``f`` (sender included, recipient excluded), ``pred[f]`` the node before
    ``f`` on that route.
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise InvalidParameterError("routing weights must be strictly positive")
    indptr, indices = csr if csr is not None else net.bidirected_csr()
    dist, pred = _kernels.dijkstra_node_weighted(indptr, indices, weights, int(source))
    missing = np.flatnonzero(~np.isfinite(dist))
    if len(missing):
        raise UnreachablePairError(int(source), int(missing[0]))
    return dist, pred


def single_routes(net: LinkGraph, weights=None) -> RouteTable:
    """One route per ordered pair under fixed node weights (default: hop count)."""
    n = net.n
    weights = np.ones(n) if weights is None else weights
    csr = net.bidirected_csr()
    dist = np.empty((n, n))
    pred = np.empty((n, n), dtype=np.int64)
    for s in range(n):
        dist[s], pred[s] = metric_routes_from(net, s, weights, csr)
    return RouteTable("single", dist, pred=pred, indptr=csr[0], indices=csr[1],
                      computed=np.ones(n, dtype=bool))
