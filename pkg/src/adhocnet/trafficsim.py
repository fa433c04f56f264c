"""Discrete-time packet traffic simulation on a single shared channel.

One step is one one-hop transmission interval.  Every step each traffic
endpoint creates a packet with probability ``mu`` for a uniformly random
other endpoint; packets wait in unbounded FIFO queues and follow a fixed
route.  Medium access is arbitrated per step over the nodes holding packets,
in a fresh random order: a hop ``u -> v`` gets the channel only if neither
``u`` nor ``v`` lies in the blocking set ``{a, b} + in(a) + in(b)`` of an
already granted hop ``a -> b``, and no granted sender or receiver lies in the
blocking set of ``u -> v``.  A granted hop completes within the step.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from adhocnet import _kernels
from adhocnet.capacity import estimate_throughput
from adhocnet.errors import BracketError, SimConfigError
from adhocnet.geomnet import LinkGraph
from adhocnet.paths import RouteTable, betweenness, cumulative_betweenness

SUPERCRITICAL_SLOPE = 0.01
GROWTH_FACTOR = 10.0


@dataclass(frozen=True)
class SimConfig:
    mu: float
    horizon: int = 20_000
    warmup: int = 2_000
    seed: int = 0
    route_source: str = "hop-count"

    def __post_init__(self):
        if not 0 <= self.mu <= 1:
            raise SimConfigError(f"mu must lie in [0, 1] (a per-step probability), got {self.mu}")
        if not 0 <= self.warmup < self.horizon:
            raise SimConfigError("need 0 <= warmup < horizon")
        if self.route_source not in ("hop-count", "metric-routing", "explicit"):
            raise SimConfigError(f"unknown route source {self.route_source!r}")


@dataclass
class SimOutcome:
    mu: float
    horizon: int
    warmup: int
    delivered_per_step: float
    created: np.ndarray
    delivered: np.ndarray
    queue_trajectory: np.ndarray
    per_node_peak_queue: np.ndarray
    overflow: bool = False
    verdict: str | None = None
    transmissions: np.ndarray | None = field(default=None, repr=False)

    @property
    def supercritical(self) -> bool | None:
        return None if self.verdict in (None, "inconclusive") else self.verdict == "supercritical"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "created", "delivered", "total_queue"])
            for t in range(self.horizon):
                w.writerow([t, int(self.created[t]), int(self.delivered[t]), int(self.queue_trajectory[t])])


@njit(cache=True)
def _mix(x):
    # splitmix64 finalizer
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


@njit(cache=True)
def _uniform(seed, step, node, lane):
    h = _mix(np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(step))
    h = _mix(h ^ (np.uint64(node) * np.uint64(0xD1B54A32D192ED03) + np.uint64(lane)))
    return (h >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _run(starts, lengths, nodes, in_indptr, in_indices, endpoints, mu, horizon, seed,
         capacity, log_capacity):
    n = len(in_indptr) - 1
    n_end = len(endpoints)
    np.random.seed(seed & 0xFFFFFFFF)
    p_src = np.empty(capacity, np.int64)
    p_dst = np.empty(capacity, np.int64)
    p_hop = np.empty(capacity, np.int64)
    p_next = np.empty(capacity, np.int64)
    free = np.arange(capacity - 1, -1, -1)
    n_free = capacity
    head = np.full(n, -1, np.int64)
    tail = np.full(n, -1, np.int64)
    qlen = np.zeros(n, np.int64)
    peak = np.zeros(n, np.int64)
    created = np.zeros(horizon, np.int64)
    delivered = np.zeros(horizon, np.int64)
    queue = np.zeros(horizon, np.int64)
    log = np.empty((log_capacity, 3), np.int64)
    n_log = 0
    covered = np.zeros(n, np.int64)
    active = np.zeros(n, np.int64)
    cand = np.empty(n, np.int64)
    buffered = 0
    overflow = False
    for t in range(horizon):
        stamp = t + 1
        for e in range(n_end):
            if _uniform(seed, t, e, 0) < mu:
                if n_free == 0:
                    overflow = True
                    break
                src = endpoints[e]
                k = int(_uniform(seed, t, e, 1) * (n_end - 1))
                if k >= e:
                    k += 1
                n_free -= 1
                p = free[n_free]
                p_src[p] = src
                p_dst[p] = endpoints[k]
                p_hop[p] = 0
                p_next[p] = -1
                if tail[src] < 0:
                    head[src] = p
                else:
                    p_next[tail[src]] = p
                tail[src] = p
                qlen[src] += 1
                if qlen[src] > peak[src]:
                    peak[src] = qlen[src]
                buffered += 1
                created[t] += 1
        if overflow:
            break
        nc = 0
        for v in range(n):
            if qlen[v] > 0:
                cand[nc] = v
                nc += 1
        for k in range(nc - 1, 0, -1):
            j = np.random.randint(0, k + 1)
            tmp = cand[k]
            cand[k] = cand[j]
            cand[j] = tmp
        for c in range(nc):
            u = cand[c]
            p = head[u]
            base = starts[p_src[p], p_dst[p]]
            v = nodes[base + p_hop[p] + 1]
            if covered[u] == stamp or covered[v] == stamp:
                continue
            if active[u] == stamp or active[v] == stamp:
                continue
            ok = True
            for q in range(in_indptr[u], in_indptr[u + 1]):
                if active[in_indices[q]] == stamp:
                    ok = False
                    break
            if ok:
                for q in range(in_indptr[v], in_indptr[v + 1]):
                    if active[in_indices[q]] == stamp:
                        ok = False
                        break
            if not ok:
                continue
            active[u] = stamp
            active[v] = stamp
            covered[u] = stamp
            covered[v] = stamp
            for q in range(in_indptr[u], in_indptr[u + 1]):
                covered[in_indices[q]] = stamp
            for q in range(in_indptr[v], in_indptr[v + 1]):
                covered[in_indices[q]] = stamp
            if n_log < log_capacity:
                log[n_log, 0] = t
                log[n_log, 1] = u
                log[n_log, 2] = v
                n_log += 1
            # hand the packet over within the step
            head[u] = p_next[p]
            if head[u] < 0:
                tail[u] = -1
            qlen[u] -= 1
            p_hop[p] += 1
            if v == p_dst[p]:
                delivered[t] += 1
                buffered -= 1
                free[n_free] = p
                n_free += 1
            else:
                p_next[p] = -1
                if tail[v] < 0:
                    head[v] = p
                else:
                    p_next[tail[v]] = p
                tail[v] = p
                qlen[v] += 1
                if qlen[v] > peak[v]:
                    peak[v] = qlen[v]
        queue[t] = buffered
    return created, delivered, queue, peak, overflow, log[:n_log]


@dataclass
class _Prepared:
    starts: np.ndarray
    lengths: np.ndarray
    nodes: np.ndarray
    in_indptr: np.ndarray
    in_indices: np.ndarray
    endpoints: np.ndarray


def prepare(net: LinkGraph, routes: RouteTable, endpoints=None) -> _Prepared:
    """Flatten routes and interference lists once for repeated simulation."""
    n = net.n
    ends = np.arange(n) if endpoints is None else np.asarray(sorted(endpoints), dtype=np.int64)
    single = routes.to_single()
    mask = np.zeros(n, dtype=np.bool_)
    mask[ends] = True
    if not single.computed[ends].all():
        raise SimConfigError("route table lacks routes for some senders")
    starts, lengths, nodes = _kernels.flatten_routes(single.pred, mask, mask)
    sub = lengths[np.ix_(ends, ends)]
    if np.any((sub < 2) & ~np.eye(len(ends), dtype=bool)):
        raise SimConfigError("route table is missing a route between endpoints")
    in_indptr, in_indices = net.in_csr()
    return _Prepared(starts, lengths, nodes, in_indptr, in_indices, ends)


def simulate(net: LinkGraph, routes: RouteTable | _Prepared, cfg: SimConfig, endpoints=None,
             record_transmissions: bool = False) -> SimOutcome:
    """Run one simulation; statistics exclude the first ``cfg.warmup`` steps."""
    prep = routes if isinstance(routes, _Prepared) else prepare(net, routes, endpoints)
    n_end = len(prep.endpoints)
    expected = cfg.mu * n_end * cfg.horizon
    capacity = int(expected + 10 * np.sqrt(expected + 1) + 1024)
    log_cap = cfg.horizon * net.n if record_transmissions else 0
    created, delivered, queue, peak, overflow, log = _run(
        prep.starts, prep.lengths, prep.nodes, prep.in_indptr, prep.in_indices, prep.endpoints,
        float(cfg.mu), int(cfg.horizon), int(cfg.seed), capacity, log_cap)
    window = cfg.horizon - cfg.warmup
    rate = delivered[cfg.warmup:].sum() / window
    return SimOutcome(cfg.mu, cfg.horizon, cfg.warmup, float(rate), created, delivered, queue,
                      peak, bool(overflow), transmissions=log if record_transmissions else None)


def queue_slope(outcome: SimOutcome) -> float:
    """Least-squares slope of the total queue over the second half of the horizon."""
    half = outcome.horizon // 2
    y = outcome.queue_trajectory[half:].astype(float)
    x = np.arange(half, half + len(y), dtype=float)
    x -= x.mean()
    return float((x * (y - y.mean())).sum() / (x * x).sum())


def classify_criticality(outcome: SimOutcome) -> str:
    """``"subcritical"``, ``"supercritical"`` or ``"inconclusive"``.

    Supercritical needs both a queue slope above 0.01 packets per step and a
    final queue at least ten times the queue at the end of warmup (floored at
    one packet).  A positive slope without that growth is inconclusive.
    """
    if outcome.overflow:
        return "supercritical"
    slope = queue_slope(outcome)
    if slope <= SUPERCRITICAL_SLOPE:
        return "subcritical"
    start = max(int(outcome.queue_trajectory[outcome.warmup]), 1)
    if outcome.queue_trajectory[-1] > GROWTH_FACTOR * start:
        return "supercritical"
    return "inconclusive"


def probe(net, prep, cfg: SimConfig, max_doublings: int = 3) -> SimOutcome:
    """Simulate and classify, doubling the horizon while inconclusive.

    If the verdict is still inconclusive after ``max_doublings`` doublings,
    the persistent positive queue trend is taken as supercritical.
    """
    for k in range(max_doublings + 1):
        out = simulate(net, prep, cfg)
        out.verdict = classify_criticality(out)
        if out.verdict != "inconclusive":
            return out
        if k < max_doublings:
            cfg = replace(cfg, horizon=cfg.horizon * 2)
    out.verdict = "supercritical"
    return out


@dataclass
class CriticalRateResult:
    mu_lo: float
    mu_hi: float
    n_traffic: int
    probes: list[tuple[float, str]]

    @property
    def mu_crit(self) -> float:
        return 0.5 * (self.mu_lo + self.mu_hi)

    @property
    def t_e2e_sim(self) -> float:
        return self.mu_crit * self.n_traffic

    @property
    def width(self) -> float:
        return (self.mu_hi - self.mu_lo) / self.mu_crit


def find_critical_rate(net: LinkGraph, routes: RouteTable, base_cfg: SimConfig, endpoints=None,
                       mu_guess: float | None = None, rel_tol: float = 0.05,
                       max_expansions: int = 12, max_doublings: int = 3) -> CriticalRateResult:
    """Bracket and bisect the packet creation rate at which queues start to grow.

    The first probe sits at ``mu_guess`` (default: the analytic estimate for
    these routes).  The bracket is widened by factors of 1.5 until it holds a
    subcritical and a supercritical rate, then bisected until its relative
    width is at most ``rel_tol``.
    """
    prep = prepare(net, routes, endpoints)
    n_traffic = len(prep.endpoints)
    if mu_guess is None:
        cv = cumulative_betweenness(net, betweenness(net, routes, endpoints))
        mu_guess = estimate_throughput(net, cv).t_e2e / n_traffic
    mu_guess = min(mu_guess, 1.0)
    log = []

    def verdict(mu):
        out = probe(net, prep, replace(base_cfg, mu=mu), max_doublings)
        log.append((mu, out.verdict))
        return out.verdict == "supercritical"

    lo = hi = None
    if verdict(mu_guess):
        hi = mu_guess
        mu = mu_guess
        for _ in range(max_expansions):
            mu /= 1.5
            if not verdict(mu):
                lo = mu
                break
            hi = mu
    else:
        lo = mu_guess
        mu = mu_guess
        for _ in range(max_expansions):
            if mu >= 1.0:
                break
            mu = min(mu * 1.5, 1.0)
            if verdict(mu):
                hi = mu
                break
            lo = mu
    if lo is None or hi is None:
        raise BracketError(f"could not bracket the critical rate (probes: {log})")
    while (hi - lo) / (0.5 * (hi + lo)) > rel_tol:
        mid = 0.5 * (lo + hi)
        if verdict(mid):
            hi = mid
        else:
            lo = mid
    return CriticalRateResult(lo, hi, n_traffic, log)
