"""Analytic end-to-end throughput from cumulative betweenness.

A node ``i`` receives packets at a rate proportional to ``B_i`` and needs on
average ``B_cum_i / B_i`` one-hop intervals to get one out, because every node
with a link towards ``i`` blocks it while active.  Its critical packet
creation rate is therefore ``(N-1) / B_cum_i`` and the network saturates at the
smallest of these, giving ``T_e2e = min_i N(N-1) / B_cum_i`` completed
end-to-end communications per one-hop interval.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from adhocnet.errors import DegenerateNodeError
from adhocnet.geomnet import LinkGraph
from adhocnet.paths import CentralityVector, hopcount_centrality

_TIE_TOL = 1e-12


@dataclass(frozen=True)
class ThroughputEstimate:
    t_e2e: float
    bottleneck: int
    per_node_critical_rate: np.ndarray


def sending_time(cv: CentralityVector, i: int) -> float:
    """Mean one-hop intervals node ``i`` waits to send, ``B_cum_i / B_i``."""
    if cv.B[i] <= 0:
        raise DegenerateNodeError(f"node {i} carries no traffic (B_i = 0)")
    return float(cv.B_cum[i] / cv.B[i])


def critical_rates(net: LinkGraph, cv: CentralityVector) -> np.ndarray:
    """Per-node critical packet creation rate ``(N-1) / B_cum_i``.

    Nodes that carry no traffic never saturate and get ``inf``.
    """
    n = cv.n_traffic
    b_cum = np.asarray(cv.B_cum, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(b_cum > 0, (n - 1) / b_cum, np.inf)


def _argmin_smallest_id(values: np.ndarray) -> int:
    lo = values.min()
    return int(np.flatnonzero(values <= lo + _TIE_TOL * abs(lo))[0])


def estimate_throughput(net: LinkGraph, cv: CentralityVector) -> ThroughputEstimate:
    """``T_e2e = N * min_i mu_i^crit``; ties in the bottleneck go to the smallest id."""
    rates = critical_rates(net, cv)
    k = _argmin_smallest_id(rates)
    n = cv.n_traffic
    # N(N-1)/B_cum directly, so integral cases stay exact
    t = n * (n - 1) / float(cv.B_cum[k])
    return ThroughputEstimate(t, k, rates)


def rejected_ansatz_throughput(net: LinkGraph, cv: CentralityVector) -> ThroughputEstimate:
    """Throughput with sending time ``1 + k_in``: fails the central-hub check."""
    n = cv.n_traffic
    load = np.asarray(cv.B, dtype=float) * (1 + net.in_degree())
    with np.errstate(divide="ignore"):
        rates = np.where(load > 0, (n - 1) / load, np.inf)
    k = _argmin_smallest_id(rates)
    return ThroughputEstimate(n * (n - 1) / float(load[k]), k, rates)


def hopcount_throughput(net: LinkGraph, endpoints=None) -> float:
    """Objective used by the optimizers: shortest-path routing, estimate only."""
    cv = hopcount_centrality(net, endpoints)
    return cv.n_traffic * (cv.n_traffic - 1) / float(cv.B_cum.max())
