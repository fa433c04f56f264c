"""Compiled inner loops over CSR graphs.

Node ids are 0..N-1, neighbor lists are sorted ascending.  ``src_mask`` and
``dst_mask`` select which nodes act as initial senders and final recipients.
"""
import heapq

import numpy as np
from numba import njit


@njit(cache=True)
def brandes_hopcount(indptr, indices, src_mask, dst_mask):
    """Fractional shortest-path betweenness with senders counted.

    Returns ``(B, bad_source)``; ``bad_source`` is -1 unless some recipient is
    unreachable from that sender.
    """
    n = len(indptr) - 1
    B = np.zeros(n)
    dist = np.empty(n, np.int64)
    sigma = np.empty(n)
    delta = np.empty(n)
    order = np.empty(n, np.int64)
    n_dst = 0
    for v in range(n):
        if dst_mask[v]:
            n_dst += 1
    for s in range(n):
        if not src_mask[s]:
            continue
        dist[:] = -1
        sigma[:] = 0.0
        delta[:] = 0.0
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
        reached = 0
        for k in range(1, tail):
            if dst_mask[order[k]]:
                reached += 1
        expected = n_dst - (1 if dst_mask[s] else 0)
        if reached < expected:
            return B, s
        B[s] += reached
        for k in range(tail - 1, 0, -1):
            w = order[k]
            coeff = ((1.0 if dst_mask[w] else 0.0) + delta[w]) / sigma[w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if dist[v] == dist[w] - 1:
                    delta[v] += sigma[v] * coeff
            B[w] += delta[w]
    return B, -1


@njit(cache=True)
def all_pairs_bfs(indptr, indices):
    """Hop distances (-1 if unreachable) and shortest-path counts for all pairs."""
    n = len(indptr) - 1
    dist = np.full((n, n), -1, np.int64)
    sigma = np.zeros((n, n))
    order = np.empty(n, np.int64)
    for s in range(n):
        d = dist[s]
        sg = sigma[s]
        d[s] = 0
        sg[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            for p in range(indptr[v], indptr[v + 1]):
                w = indices[p]
                if d[w] < 0:
                    d[w] = d[v] + 1
                    order[tail] = w
                    tail += 1
                if d[w] == d[v] + 1:
                    sg[w] += sg[v]
    return dist, sigma


@njit(cache=True)
def dag_accumulate(indptr, indices, dist, sigma, src_mask, dst_mask):
    """Brandes dependency accumulation over stored distances and path counts."""
    n = len(indptr) - 1
    B = np.zeros(n)
    delta = np.empty(n)
    order = np.empty(n, np.int64)
    for s in range(n):
        if not src_mask[s]:
            continue
        d = dist[s]
        # counting sort of reachable nodes by hop distance
        maxd = 0
        for v in range(n):
            if d[v] > maxd:
                maxd = d[v]
        counts = np.zeros(maxd + 2, np.int64)
        for v in range(n):
            if d[v] >= 0:
                counts[d[v] + 1] += 1
        for h in range(1, maxd + 2):
            counts[h] += counts[h - 1]
        tail = counts[maxd + 1]
        for v in range(n):
            if d[v] >= 0:
                order[counts[d[v]]] = v
                counts[d[v]] += 1
        delta[:] = 0.0
        reached = 0
        for k in range(tail - 1, 0, -1):
            w = order[k]
            if dst_mask[w]:
                reached += 1
            coeff = ((1.0 if dst_mask[w] else 0.0) + delta[w]) / sigma[s, w]
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if d[v] == d[w] - 1:
                    delta[v] += sigma[s, v] * coeff
            B[w] += delta[w]
        B[s] += reached
    return B


@njit(cache=True)
def dijkstra_node_weighted(indptr, indices, weights, source):
    """Single-source routes minimizing the summed weight of forwarding nodes.

    Relaxing ``u -> v`` costs ``weights[u]``, so a route's length includes the
    sender and excludes the recipient.  Among equal-length alternatives the
    predecessor with the smallest id wins.
    """
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, np.bool_)
    dist[source] = 0.0
    heap = [(0.0, source)]
    while len(heap) > 0:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        nd = du + weights[u]
        for p in range(indptr[u], indptr[u + 1]):
            v = indices[p]
            if done[v]:
                continue
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))
            elif nd == dist[v] and u < pred[v]:
                pred[v] = u
    return dist, pred


@njit(cache=True)
def add_tree_contribution(pred_row, source, dst_mask, B, sign):
    """Add ``sign`` times the per-sender betweenness of one route tree to ``B``.

    Every node on the route to a recipient counts once, the recipient itself
    excluded.
    """
    n = len(pred_row)
    for f in range(n):
        if f == source or not dst_mask[f]:
            continue
        v = pred_row[f]
        while v >= 0:
            B[v] += sign
            if v == source:
                break
            v = pred_row[v]


@njit(cache=True)
def single_route_betweenness(pred, src_mask, dst_mask):
    n = pred.shape[0]
    B = np.zeros(n, np.int64)
    for s in range(n):
        if src_mask[s]:
            add_tree_contribution(pred[s], s, dst_mask, B, 1)
    return B


@njit(cache=True)
def dag_to_single(indptr, indices, dist):
    """Pick one shortest route per pair: the smallest-id predecessor at each hop."""
    n = len(indptr) - 1
    pred = np.full((n, n), -1, np.int64)
    for s in range(n):
        d = dist[s]
        for w in range(n):
            if w == s or d[w] < 0:
                continue
            for p in range(indptr[w], indptr[w + 1]):
                v = indices[p]
                if d[v] == d[w] - 1:
                    pred[s, w] = v
                    break
    return pred


@njit(cache=True)
def in_neighbor_sum(in_indptr, in_indices, values):
    """``values[i] + sum(values[j] for j with a link j -> i)``."""
    n = len(in_indptr) - 1
    out = values.copy()
    for i in range(n):
        for p in range(in_indptr[i], in_indptr[i + 1]):
            out[i] += values[in_indices[p]]
    return out


@njit(cache=True)
def flatten_routes(pred, src_mask, dst_mask):
    """Explicit node sequences for every (sender, recipient) route.

    Returns ``(starts, lengths, nodes)``: route ``s -> f`` is
    ``nodes[starts[s, f]:starts[s, f] + lengths[s, f]]``, sender first.
    """
    n = pred.shape[0]
    lengths = np.zeros((n, n), np.int64)
    for s in range(n):
        if not src_mask[s]:
            continue
        for f in range(n):
            if f == s or not dst_mask[f]:
                continue
            h = 1
            v = f
            while v != s:
                v = pred[s, v]
                if v < 0:
                    h = 0
                    break
                h += 1
            lengths[s, f] = h
    starts = np.zeros((n, n), np.int64)
    total = 0
    for s in range(n):
        for f in range(n):
            starts[s, f] = total
            total += lengths[s, f]
    nodes = np.empty(total, np.int64)
    for s in range(n):
        for f in range(n):
            h = lengths[s, f]
            if h == 0:
                continue
            k = starts[s, f] + h - 1
            v = f
            while True:
                nodes[k] = v
                if v == s:
                    break
                v = pred[s, v]
                k -= 1
    return starts, lengths, nodes
