"""Independent brute-force references used by the tests.

Nothing here imports the compiled kernels; everything is plain Python with
exact arithmetic where counts are involved.
"""
from fractions import Fraction
import itertools

import numpy as np


def bidirected_lists(adj):
    adj = np.asarray(adj, bool)
    n = len(adj)
    return [[j for j in range(n) if j != i and adj[i, j] and adj[j, i]] for i in range(n)]


def all_simple_paths(nbrs, m, n):
    out = []
    stack = [(m, [m])]
    while stack:
        v, path = stack.pop()
        if v == n:
            out.append(path)
            continue
        for w in nbrs[v]:
            if w not in path:
                stack.append((w, path + [w]))
    return out


def shortest_paths(nbrs, m, n):
    paths = all_simple_paths(nbrs, m, n)
    if not paths:
        return []
    h = min(len(p) for p in paths)
    return [p for p in paths if len(p) == h]


def enumerated_betweenness(adj, endpoints=None):
    """Exact fractional betweenness by enumerating every shortest path."""
    nbrs = bidirected_lists(adj)
    n = len(nbrs)
    ends = range(n) if endpoints is None else list(endpoints)
    B = [Fraction(0)] * n
    for m in ends:
        for t in ends:
            if m == t:
                continue
            paths = shortest_paths(nbrs, m, t)
            for p in paths:
                for k in p[:-1]:
                    B[k] += Fraction(1, len(paths))
    return B


def path_counts(adj):
    nbrs = bidirected_lists(adj)
    n = len(nbrs)
    return {(m, t): len(shortest_paths(nbrs, m, t)) for m in range(n) for t in range(n) if m != t}


def hop_distance(adj):
    nbrs = bidirected_lists(adj)
    n = len(nbrs)
    return {(m, t): len(shortest_paths(nbrs, m, t)[0]) - 1
            for m in range(n) for t in range(n) if m != t}


def metric_length(path, weights):
    return sum(weights[k] for k in path[:-1])


def best_metric_length(adj, m, t, weights):
    nbrs = bidirected_lists(adj)
    return min(metric_length(p, weights) for p in all_simple_paths(nbrs, m, t))


def forcing_fixed_point(positions, k_min, alpha=2.0, snr=1.0):
    """Powers from literally iterating the mutual forcing rule on raw powers."""
    pos = np.asarray(positions, float)
    n = len(pos)
    cost = [[snr * float(np.hypot(*(pos[i] - pos[j]))) ** alpha for j in range(n)] for i in range(n)]
    closest = [sorted((j for j in range(n) if j != i), key=lambda j: (cost[i][j], j))[:k_min]
               for i in range(n)]
    P = [0.0] * n
    while True:
        old = list(P)
        for i in range(n):
            for j in closest[i]:
                P[j] = max(P[j], cost[j][i])
                P[i] = max(P[i], cost[i][j])
        if P == old:
            break
    adj = np.array([[i != j and P[i] >= cost[i][j] for j in range(n)] for i in range(n)])
    return P, adj, closest


def route_nodes(pred_row, source, target):
    seq = [target]
    while seq[-1] != source:
        seq.append(int(pred_row[seq[-1]]))
    return seq[::-1]


def pair_dependency_betweenness(adj):
    """Betweenness from d(m,k) + d(k,n) == d(m,n) pair tests, no accumulation trick."""
    nbrs = bidirected_lists(adj)
    n = len(nbrs)
    dist, sigma = [], []
    for s in range(n):
        d = [-1] * n
        c = [0] * n
        d[s], c[s] = 0, 1
        frontier = [s]
        while frontier:
            nxt = []
            for v in frontier:
                for w in nbrs[v]:
                    if d[w] < 0:
                        d[w] = d[v] + 1
                        nxt.append(w)
                    if d[w] == d[v] + 1:
                        c[w] += c[v]
            frontier = nxt
        dist.append(d)
        sigma.append(c)
    B = [0.0] * n
    for m in range(n):
        for t in range(n):
            if m == t:
                continue
            for k in range(n):
                if k != t and dist[m][k] >= 0 and dist[k][t] >= 0 \
                        and dist[m][k] + dist[k][t] == dist[m][t]:
                    B[k] += sigma[m][k] * sigma[k][t] / sigma[m][t]
    return B


def cumulative(adj, B):
    adj = np.asarray(adj, bool)
    n = len(B)
    return [B[i] + sum(B[j] for j in range(n) if j != i and adj[j, i]) for i in range(n)]


def throughput(adj):
    """Analytic end-to-end throughput recomputed from the adjacency alone."""
    B = pair_dependency_betweenness(adj)
    n = len(B)
    return n * (n - 1) / max(cumulative(adj, B))


def adj_with_link(cost, powers, a, b):
    """Adjacency after raising both ends just enough to reach each other."""
    p = list(powers)
    p[a] = max(p[a], cost[a][b])
    p[b] = max(p[b], cost[b][a])
    n = len(p)
    return np.array([[i != j and p[i] >= cost[i][j] for j in range(n)] for i in range(n)]), p
