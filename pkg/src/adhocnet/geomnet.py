"""Geometric minimum-node-degree networks on the unit square.

Nodes sit at fixed positions; node ``i`` reaches node ``j`` over a directed
link iff ``P_i / R_ij**alpha >= snr``.  Powers are not stored directly but as
rungs on a per-node power ladder: rung ``k`` is the smallest power that reaches
the ``k`` closest other nodes.  Only bidirected links carry routed traffic,
while every directed link ``j -> i`` makes ``j`` an interferer of ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from adhocnet.errors import InvalidParameterError


@dataclass(frozen=True)
class RadioParams:
    alpha: float = 2.0
    snr: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.snr > 0):
            raise InvalidParameterError(f"alpha and snr must be positive, got {self}")


@dataclass(frozen=True)
class SpatialLayout:
    positions: np.ndarray
    seed: int | None = None

    @property
    def n(self) -> int:
        return len(self.positions)


def generate_layout(n: int, seed: int) -> SpatialLayout:
    """Place ``n`` nodes uniformly at random in the unit square."""
    if n < 2:
        raise InvalidParameterError(f"need at least 2 nodes, got n={n}")
    rng = np.random.default_rng(seed)
    return SpatialLayout(rng.random((n, 2)), seed)


class LinkGraph:
    """A directed link structure without geometry.

    ``adj[i, j]`` is True when ``i`` reaches ``j``.  Used directly for the
    idealized fixtures (fully connected, central hub, paths, cycles) and as
    the base class of :class:`AdHocNetwork`.
    """

    def __init__(self, adj):
        adj = np.array(adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidParameterError("adjacency must be square")
        np.fill_diagonal(adj, False)
        self.adj = adj

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def bidirected(self) -> np.ndarray:
        return self.adj & self.adj.T

    def degree(self) -> np.ndarray:
        """Bidirected (communication) degree of every node."""
        return self.bidirected.sum(axis=1)

    def in_degree(self) -> np.ndarray:
        return self.adj.sum(axis=0)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adj[i] & self.adj[:, i])

    def in_neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adj[:, i])

    def bidirected_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR arrays of the bidirected graph, neighbors in ascending id order."""
        return _csr(self.bidirected)

    def in_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR arrays listing, for each node, the nodes with a link towards it."""
        return _csr(self.adj.T)

    def bidirected_edges(self) -> set[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.bidirected, 1))
        return set(zip(i.tolist(), j.tolist()))

    @classmethod
    def complete(cls, n: int) -> "LinkGraph":
        return cls(np.ones((n, n), dtype=bool))

    @classmethod
    def star(cls, n_leaves: int) -> "LinkGraph":
        """Central hub (node 0) linked both ways to ``n_leaves`` leaves."""
        adj = np.zeros((n_leaves + 1, n_leaves + 1), dtype=bool)
        adj[0, 1:] = True
        adj[1:, 0] = True
        return cls(adj)

    @classmethod
    def from_edges(cls, n: int, edges, directed=()) -> "LinkGraph":
        adj = np.zeros((n, n), dtype=bool)
        for a, b in edges:
            adj[a, b] = adj[b, a] = True
        for a, b in directed:
            adj[a, b] = True
        return cls(adj)

    @classmethod
    def path(cls, n: int) -> "LinkGraph":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int) -> "LinkGraph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def _csr(mat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    counts = mat.sum(axis=1)
    indptr = np.zeros(len(mat) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.nonzero(mat)[1].astype(np.int64)
    return indptr, indices


class AdHocNetwork(LinkGraph):
    """Positions plus per-node power rungs; links are always derived.

    Attributes
    ----------
    cost : (N, N) array
        ``snr * R_ij**alpha``, the power node ``i`` needs to reach ``j``.
    ladder : (N, N-1) int array
        Other nodes of each row sorted by distance, ties by ascending id.
    rank : (N, N) int array
        ``rank[i, j]`` is the rung at which ``i`` first reaches ``j``.
    rungs, floor_rungs : (N,) int arrays
        Current rungs and the construction rungs they may never undercut.
    """

    def __init__(self, layout: SpatialLayout, params: RadioParams, k_min: int,
                 rungs, floor_rungs=None, _geometry=None):
        self.layout = layout
        self.params = params
        self.k_min = int(k_min)
        n = layout.n
        if _geometry is None:
            _geometry = _ladder_geometry(np.asarray(layout.positions, dtype=float), params)
        self.cost, self.ladder, self.rank = _geometry
        self.rungs = np.array(rungs, dtype=np.int64)
        if floor_rungs is None:
            floor_rungs = self.rungs
        self.floor_rungs = np.array(floor_rungs, dtype=np.int64)
        if self.rungs.shape != (n,) or self.floor_rungs.shape != (n,):
            raise InvalidParameterError("rung arrays must have one entry per node")
        if np.any(self.rungs < 0) or np.any(self.rungs > n - 1):
            raise InvalidParameterError("rungs must lie in [0, N-1]")
        if np.any(self.rungs < self.floor_rungs):
            raise InvalidParameterError("a rung lies below its floor")
        self.adj = np.zeros((n, n), dtype=bool)
        for i in range(n):
            self._refresh_row(i)

    def power(self, i: int) -> float:
        r = self.rungs[i]
        return -1.0 if r == 0 else float(self.cost[i, self.ladder[i, r - 1]])

    @property
    def powers(self) -> np.ndarray:
        return np.array([self.power(i) for i in range(self.n)])

    def _refresh_row(self, i: int) -> None:
        row = self.cost[i] <= self.power(i)
        row[i] = False
        self.adj[i] = row

    def set_rung(self, i: int, rung: int) -> None:
        """Low-level rung assignment; does not enforce forcing rules."""
        self.rungs[i] = rung
        self._refresh_row(i)

    def copy(self) -> "AdHocNetwork":
        new = object.__new__(AdHocNetwork)
        new.layout, new.params, new.k_min = self.layout, self.params, self.k_min
        new.cost, new.ladder, new.rank = self.cost, self.ladder, self.rank
        new.rungs = self.rungs.copy()
        new.floor_rungs = self.floor_rungs.copy()
        new.adj = self.adj.copy()
        return new

    def with_rungs(self, rungs) -> "AdHocNetwork":
        new = self.copy()
        for i in np.flatnonzero(new.rungs != rungs):
            new.set_rung(int(i), int(rungs[i]))
        return new

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": self.layout.seed,
            "alpha": self.params.alpha,
            "snr": self.params.snr,
            "k_min": self.k_min,
            "positions": np.asarray(self.layout.positions, dtype=float).tolist(),
            "rungs": self.rungs.tolist(),
            "floor_rungs": self.floor_rungs.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AdHocNetwork":
        positions = np.array(doc["positions"], dtype=float)
        if positions.shape != (doc["n"], 2):
            raise InvalidParameterError("positions do not match n")
        layout = SpatialLayout(positions, doc.get("seed"))
        params = RadioParams(float(doc["alpha"]), float(doc["snr"]))
        return cls(layout, params, doc["k_min"], doc["rungs"], doc["floor_rungs"])

    def __eq__(self, other):
        if not isinstance(other, AdHocNetwork):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _ladder_geometry(positions: np.ndarray, params: RadioParams):
    n = len(positions)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    cost = params.snr * dist ** params.alpha
    keyed = cost.copy()
    np.fill_diagonal(keyed, -1.0)
    # stable sort keeps ascending node id among equal distances
    order = np.argsort(keyed, axis=1, kind="stable")
    ladder = np.ascontiguousarray(order[:, 1:]).astype(np.int64)
    rank = np.zeros((n, n), dtype=np.int64)
    rows = np.repeat(np.arange(n), n - 1)
    rank[rows, ladder.ravel()] = np.tile(np.arange(1, n), n)
    return cost, ladder, rank


def build_min_degree_network(layout: SpatialLayout, params: RadioParams | None = None,
                             k_min: int = 8) -> AdHocNetwork:
    """Heterogeneous power assignment by mutual forcing.

    Every node demands that its ``k_min`` closest nodes reach it, and raises
    its own power to reach them.  The rule is iterated synchronously until no
    rung changes; the resulting rungs also become the floor rungs.
    """
    params = params or RadioParams()
    n = layout.n
    if not 1 <= k_min <= n - 1:
        raise InvalidParameterError(f"k_min must be in [1, {n - 1}], got {k_min}")
    geometry = _ladder_geometry(np.asarray(layout.positions, dtype=float), params)
    _, ladder, rank = geometry
    rungs = np.full(n, k_min, dtype=np.int64)
    forced = ladder[:, :k_min].ravel()
    forcer = np.repeat(np.arange(n), k_min)
    while True:
        new = rungs.copy()
        np.maximum.at(new, forced, rank[forced, forcer])
        if np.array_equal(new, rungs):
            break
        rungs = new
    return AdHocNetwork(layout, params, k_min, rungs, rungs.copy(), _geometry=geometry)


def is_strongly_connected(net: LinkGraph) -> bool:
    """True iff every node reaches every other node over directed links."""
    ncomp, _ = connected_components(csr_matrix(net.adj), directed=True, connection="strong")
    return ncomp == 1


def is_routable(net: LinkGraph) -> bool:
    """True iff the bidirected links alone connect all nodes."""
    ncomp, _ = connected_components(csr_matrix(net.bidirected), directed=False)
    return ncomp == 1


def step_up(net: AdHocNetwork, i: int) -> frozenset:
    """Raise node ``i`` one rung and force the newly reached node to answer.

    Returns the nodes whose power changed; an empty set means the move was
    refused because ``i`` already sits on its top rung.
    """
    r = int(net.rungs[i])
    if r >= net.n - 1:
        return frozenset()
    net.set_rung(i, r + 1)
    changed = {i}
    j = int(net.ladder[i, r])
    if not net.adj[j, i]:
        net.set_rung(j, int(net.rank[j, i]))
        changed.add(j)
    return frozenset(changed)


def step_down(net: AdHocNetwork, i: int) -> frozenset:
    """Lower node ``i`` one rung; a lost bidirected neighbor relaxes its power.

    The lost neighbor drops to the lowest rung that keeps all its remaining
    bidirected links and respects its floor.  Returns the changed nodes; an
    empty set means the move was refused at the floor rung.
    """
    r = int(net.rungs[i])
    if r <= net.floor_rungs[i]:
        return frozenset()
    j = int(net.ladder[i, r - 1])
    was_bidirected = net.adj[i, j] and net.adj[j, i]
    net.set_rung(i, r - 1)
    changed = {i}
    if was_bidirected and not net.adj[i, j]:
        keep = net.adj[j] & net.adj[:, j]
        need = int(net.floor_rungs[j])
        if keep.any():
            need = max(need, int(net.rank[j, keep].max()))
        if need < net.rungs[j]:
            net.set_rung(j, need)
            changed.add(j)
    return frozenset(changed)
