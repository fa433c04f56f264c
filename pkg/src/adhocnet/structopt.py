"""Topology optimization on the transmission power ladders.

The optimizer is a randomized coordinate ascent: in each round every node is
visited once in random order and tries one rung up and one rung down, and the
best of {keep, down, up} is kept.  A gradient phase ends after a round without
any accepted move.  Optional meta-rounds kick the local maximum by moving a
few random nodes one rung and climb again.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from adhocnet.capacity import hopcount_throughput
from adhocnet.errors import InvalidParameterError
from adhocnet.geomnet import AdHocNetwork, step_down, step_up
from adhocnet.paths import hopcount_centrality

Objective = Callable[[AdHocNetwork], float]

# relative margin an objective must beat to count as an improvement
IMPROVE_TOL = 1e-12


@dataclass
class OptimizerConfig:
    n_perturb: int = 1
    max_meta_rounds: int = 0
    stop_after_first_local_max: bool = True
    seed: int = 0
    max_rounds: int | None = None
    # separate stream for meta-round kicks; None shares the climbing stream
    perturb_seed: int | None = None

    def __post_init__(self):
        if self.n_perturb < 1:
            raise InvalidParameterError("n_perturb must be at least 1")
        if self.max_meta_rounds < 0:
            raise InvalidParameterError("max_meta_rounds must be non-negative")


@dataclass
class MoveRecord:
    meta_round: int
    round: int
    node: int
    move: str
    before: float
    after: float


@dataclass
class OptimizationTrace:
    moves: list[MoveRecord]
    initial_objective: float
    local_maxima: list[float]
    best_objective: float
    best_meta_round: int
    network: AdHocNetwork
    added_links: list[tuple[int, int]]
    rounds_per_meta: list[int] = field(default_factory=list)
    # power rungs at the end of every gradient phase
    local_max_rungs: list[np.ndarray] = field(default_factory=list, repr=False)

    def local_max_network(self, k: int) -> AdHocNetwork:
        return self.network.with_rungs(self.local_max_rungs[k])

    def accepted(self, meta_round: int | None = None) -> list[MoveRecord]:
        return [m for m in self.moves
                if m.move != "none" and (meta_round is None or m.meta_round == meta_round)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["meta_round", "round", "node", "move", "objective"])
            for m in self.moves:
                w.writerow([m.meta_round, m.round, m.node, m.move, repr(m.after)])

    def write_added_links(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["a", "b"])
            w.writerows(self.added_links)


def _better(value: float, than: float) -> bool:
    return value > than + IMPROVE_TOL * abs(than)


def _probe(net: AdHocNetwork, move, i: int, objective: Objective):
    """Objective after ``move(net, i)``; the network is restored afterwards."""
    saved = net.rungs.copy()
    changed = move(net, i)
    if not changed:
        return None
    value = objective(net)
    for j in changed:
        net.set_rung(j, int(saved[j]))
    return value


def gradient_phase(net: AdHocNetwork, rng: np.random.Generator, objective: Objective,
                   current: float, meta_round: int, moves: list, max_rounds=None):
    """Climb ``net`` in place to a local maximum; returns (objective, rounds)."""
    rnd = 0
    while max_rounds is None or rnd < max_rounds:
        rnd += 1
        accepted = 0
        for i in rng.permutation(net.n):
            i = int(i)
            down = _probe(net, step_down, i, objective)
            up = _probe(net, step_up, i, objective)
            choice, best = "none", current
            # tie order: keep, then down, then up
            if down is not None and _better(down, best):
                choice, best = "down", down
            if up is not None and _better(up, best):
                choice, best = "up", up
            if choice != "none":
                (step_down if choice == "down" else step_up)(net, i)
                accepted += 1
            moves.append(MoveRecord(meta_round, rnd, i, choice, current, best))
            current = best
        if accepted == 0:
            break
    return current, rnd


def perturb(net: AdHocNetwork, rng: np.random.Generator, n_perturb: int) -> list[int]:
    """Move ``n_perturb`` random nodes one rung in a random direction."""
    nodes = rng.choice(net.n, size=min(n_perturb, net.n), replace=False)
    moved = []
    for i in nodes:
        i = int(i)
        first, second = (step_up, step_down) if rng.random() < 0.5 else (step_down, step_up)
        if first(net, i) or second(net, i):
            moved.append(i)
    return moved


def optimize(net: AdHocNetwork, cfg: OptimizerConfig | None = None,
             objective: Objective | None = None) -> OptimizationTrace:
    """Maximize the throughput estimate by power-ladder moves.

    Parameters
    ----------
    net : AdHocNetwork
        Starting network; left untouched.
    cfg : OptimizerConfig
        With ``stop_after_first_local_max`` (the default) only the first
        gradient phase runs.  Otherwise ``max_meta_rounds`` perturb-and-climb
        cycles follow.
    objective : callable, optional
        Network -> value to maximize; defaults to the shortest-path estimate.

    Returns
    -------
    OptimizationTrace
        Every visited move, the local maximum of each meta-round, and the best
        network seen.
    """
    cfg = cfg or OptimizerConfig()
    objective = objective or hopcount_throughput
    rng = np.random.default_rng(cfg.seed)
    kick_rng = rng if cfg.perturb_seed is None else np.random.default_rng(cfg.perturb_seed)
    work = net.copy()
    initial = objective(work)
    moves: list[MoveRecord] = []
    value, rounds = gradient_phase(work, rng, objective, initial, 0, moves, cfg.max_rounds)
    maxima, rounds_per_meta, snapshots = [value], [rounds], [work.rungs.copy()]
    best_value, best_rungs, best_meta = value, work.rungs.copy(), 0
    n_meta = 0 if cfg.stop_after_first_local_max else cfg.max_meta_rounds
    for meta in range(1, n_meta + 1):
        perturb(work, kick_rng, cfg.n_perturb)
        value = objective(work)
        value, rounds = gradient_phase(work, rng, objective, value, meta, moves, cfg.max_rounds)
        maxima.append(value)
        rounds_per_meta.append(rounds)
        snapshots.append(work.rungs.copy())
        if _better(value, best_value):
            best_value, best_rungs, best_meta = value, work.rungs.copy(), meta
    best = net.with_rungs(best_rungs)
    added = sorted(best.bidirected_edges() - net.bidirected_edges())
    return OptimizationTrace(moves, initial, maxima, best_value, best_meta, best, added,
                             rounds_per_meta, snapshots)


# -- link ranking ---------------------------------------------------------------

@dataclass
class LinkRanking:
    links: list[tuple[int, int]]
    objective: list[float]
    fraction: list[float]
    initial_objective: float
    final_objective: float

    def top_fraction(self, k: int) -> float:
        """Share of the initial->final gap recovered by the ``k`` best links (unclamped)."""
        return self.fraction[k - 1] if k > 0 else 0.0


def add_link(net: AdHocNetwork, a: int, b: int) -> list[int]:
    """Raise both ends just enough to make ``a <-> b`` bidirected; returns changed nodes."""
    changed = []
    for u, v in ((a, b), (b, a)):
        need = int(net.rank[u, v])
        if net.rungs[u] < need:
            net.set_rung(u, need)
            changed.append(u)
    return changed


def rank_new_links(initial: AdHocNetwork, final: AdHocNetwork, objective: Objective | None = None,
                   limit: int | None = None) -> LinkRanking:
    """Greedy forward selection of the bidirected links ``final`` added to ``initial``.

    At each step every remaining link is tried on top of the links chosen so
    far, and the one giving the largest objective is kept.  ``limit`` stops
    after that many links.
    """
    objective = objective or hopcount_throughput
    remaining = sorted(final.bidirected_edges() - initial.bidirected_edges())
    base = objective(initial)
    target = objective(final)
    gap = target - base
    current = initial.copy()
    links, values, fractions = [], [], []
    while remaining and (limit is None or len(links) < limit):
        best_val, best_link = None, None
        for a, b in remaining:
            saved = current.rungs.copy()
            changed = add_link(current, a, b)
            val = objective(current)
            for j in changed:
                current.set_rung(j, int(saved[j]))
            if best_val is None or _better(val, best_val):
                best_val, best_link = val, (a, b)
        add_link(current, *best_link)
        remaining.remove(best_link)
        links.append(best_link)
        values.append(best_val)
        fractions.append((best_val - base) / gap if gap != 0 else float("nan"))
    return LinkRanking(links, values, fractions, base, target)


# -- greedy heuristics ----------------------------------------------------------

def tags_attempt_one(net: AdHocNetwork, b_cum: np.ndarray) -> set[int]:
    """Each node tags the least-loaded member of itself plus its neighbors."""
    tags = set()
    for i in range(net.n):
        group = np.sort(np.append(net.neighbors(i), i))
        tags.add(int(group[np.argmin(b_cum[group])]))
    return tags


def tags_local_min(net: AdHocNetwork, b_cum: np.ndarray) -> set[int]:
    """Nodes whose load is strictly below that of every neighbor."""
    return {i for i in range(net.n) if np.all(b_cum[i] < b_cum[net.neighbors(i)])}


def tags_local_max(net: AdHocNetwork, b_cum: np.ndarray) -> set[int]:
    return {i for i in range(net.n) if np.all(b_cum[i] > b_cum[net.neighbors(i)])}


@dataclass
class GreedyResult:
    series: list[float]
    raised: list[list[int]]
    lowered: list[list[int]]
    network: AdHocNetwork


def greedy(net: AdHocNetwork, rounds: int, attempt: int) -> GreedyResult:
    """Run one of the three tag-and-move heuristics for ``rounds`` rounds.

    Tags come from the loads at the start of the round.  Raised nodes step up
    (forcing the new neighbor to answer); in attempt three, local load maxima
    step down unless that would drop them below their initial degree.
    """
    if attempt not in (1, 2, 3):
        raise InvalidParameterError(f"unknown greedy attempt {attempt}")
    work = net.copy()
    initial_degree = work.degree()
    cv = hopcount_centrality(work)
    series = [_estimate(cv)]
    raised_log, lowered_log = [], []
    for _ in range(rounds):
        b_cum = cv.B_cum
        up = tags_attempt_one(work, b_cum) if attempt == 1 else tags_local_min(work, b_cum)
        down = tags_local_max(work, b_cum) if attempt == 3 else set()
        raised = [i for i in sorted(up) if step_up(work, i)]
        lowered = []
        for i in sorted(down):
            saved = work.rungs.copy()
            changed = step_down(work, i)
            if changed and work.degree()[i] < initial_degree[i]:
                for j in changed:
                    work.set_rung(j, int(saved[j]))
            elif changed:
                lowered.append(i)
        cv = hopcount_centrality(work)
        series.append(_estimate(cv))
        raised_log.append(raised)
        lowered_log.append(lowered)
    return GreedyResult(series, raised_log, lowered_log, work)


def _estimate(cv) -> float:
    n = cv.n_traffic
    return n * (n - 1) / float(cv.B_cum.max())


def greedy_attempt_one(net: AdHocNetwork, rounds: int) -> GreedyResult:
    return greedy(net, rounds, 1)


def greedy_attempt_two(net: AdHocNetwork, rounds: int) -> GreedyResult:
    return greedy(net, rounds, 2)


def greedy_attempt_three(net: AdHocNetwork, rounds: int) -> GreedyResult:
    return greedy(net, rounds, 3)
