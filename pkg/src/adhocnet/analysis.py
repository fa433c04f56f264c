"""Ensembles over random networks, power-law fits and side-by-side comparisons.

An ensemble member is one random layout at one size.  Its network is built,
optionally optimized, routed with either shortest hop-count routes or the
load-aware metric, and scored by the analytic estimate and optionally by the
packet simulator.  Every member draws its seeds from named sub-streams of the
ensemble seed keyed by (N, realization), so results do not depend on worker
count or execution order.
"""
from __future__ import annotations

import csv
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from adhocnet.capacity import estimate_throughput
from adhocnet.errors import AdHocNetError, FitError, InvalidParameterError
from adhocnet.geomnet import RadioParams, build_min_degree_network, generate_layout
from adhocnet.metricroute import metric_routing
from adhocnet.paths import betweenness, cumulative_betweenness, hopcount_routes
from adhocnet.seeding import substream
from adhocnet.structopt import OptimizerConfig, optimize
from adhocnet.trafficsim import SimConfig, find_critical_rate

ROUTINGS = ("hop-count", "metric")
WORKERS_ENV = "ADHOCNET_WORKERS"


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    n_values: tuple[int, ...]
    realizations: int
    k_min: int = 8
    optimized: bool = False
    routing: str = "hop-count"
    simulate: bool = False
    seed: int = 0
    alpha: float = 2.0
    snr: float = 1.0
    metric_rounds: int = 2
    sim_horizon: int = 20_000
    sim_warmup: int = 2_000
    sim_rel_tol: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.realizations < 1:
            raise InvalidParameterError("realizations must be at least 1")
        if not self.n_values or any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise InvalidParameterError("N values must be non-empty and strictly increasing")
        if self.routing not in ROUTINGS:
            raise InvalidParameterError(f"unknown routing {self.routing!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class MemberResult:
    kind: str
    n: int
    realization: int
    layout_seed: int
    t_est: float = math.nan
    t_sim: float = math.nan
    t_est_initial: float = math.nan
    mean_degree: float = math.nan
    added_links: int = 0
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class SummaryRow:
    n: int
    count: int
    t_est: float
    t_est_se: float
    t_sim: float
    t_sim_se: float
    mean_degree: float


def mean_se(values) -> tuple[float, float]:
    """Mean and standard error of the mean, ignoring NaNs."""
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if len(v) == 0:
        return math.nan, math.nan
    se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else math.nan
    return float(v.mean()), se


@dataclass
class EnsembleTable:
    spec: EnsembleSpec
    members: list[MemberResult] = field(default_factory=list)

    def ok_members(self, n: int | None = None) -> list[MemberResult]:
        return [m for m in self.members if m.ok and (n is None or m.n == n)]

    def summary(self) -> list[SummaryRow]:
        rows = []
        for n in self.spec.n_values:
            ms = self.ok_members(n)
            if not ms:
                continue
            est, est_se = mean_se(m.t_est for m in ms)
            sim, sim_se = mean_se(m.t_sim for m in ms)
            deg = float(np.mean([m.mean_degree for m in ms]))
            rows.append(SummaryRow(n, len(ms), est, est_se, sim, sim_se, deg))
        return rows

    def write_csv(self, path) -> None:
        cols = [f.name for f in fields(MemberResult)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for m in self.members:
                w.writerow([_cell(getattr(m, c)) for c in cols])

    def write_summary_csv(self, path) -> None:
        cols = [f.name for f in fields(SummaryRow)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["kind"] + cols)
            for r in self.summary():
                w.writerow([self.spec.kind] + [_cell(getattr(r, c)) for c in cols])

    @classmethod
    def read_csv(cls, path, spec: EnsembleSpec | None = None) -> "EnsembleTable":
        members = []
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                members.append(MemberResult(
                    row["kind"], int(row["n"]), int(row["realization"]), int(row["layout_seed"]),
                    float(row["t_est"]), float(row["t_sim"]), float(row["t_est_initial"]),
                    float(row["mean_degree"]), int(row["added_links"]), row["error"]))
        if spec is None:
            ns = sorted({m.n for m in members})
            reals = max((m.realization for m in members), default=0) + 1
            spec = EnsembleSpec(members[0].kind if members else "table", tuple(ns), reals)
        return cls(spec, members)


def _cell(x):
    return repr(x) if isinstance(x, float) else x


def run_member(spec: EnsembleSpec, n: int, realization: int) -> MemberResult:
    """Build, optionally optimize, route and score one ensemble member."""
    layout_seed = substream(spec.seed, "layout", n, realization)
    res = MemberResult(spec.kind, n, realization, layout_seed)
    try:
        params = RadioParams(spec.alpha, spec.snr)
        net = build_min_degree_network(generate_layout(n, layout_seed), params, spec.k_min)
        if spec.optimized:
            cfg = OptimizerConfig(seed=substream(spec.seed, "optimizer", n, realization))
            trace = optimize(net, cfg)
            res.t_est_initial = trace.initial_objective
            res.added_links = len(trace.added_links)
            net = trace.network
        if spec.routing == "metric":
            routes = metric_routing(net, spec.metric_rounds).routes
        else:
            routes = hopcount_routes(net)
        cv = cumulative_betweenness(net, betweenness(net, routes))
        res.t_est = estimate_throughput(net, cv).t_e2e
        if not spec.optimized:
            res.t_est_initial = res.t_est
        res.mean_degree = float(net.degree().mean())
        if spec.simulate:
            sim_cfg = SimConfig(mu=0.0, horizon=spec.sim_horizon, warmup=spec.sim_warmup,
                                seed=substream(spec.seed, "simulator", n, realization),
                                route_source="metric-routing" if spec.routing == "metric" else "hop-count")
            crit = find_critical_rate(net, routes, sim_cfg, mu_guess=res.t_est / n,
                                      rel_tol=spec.sim_rel_tol)
            res.t_sim = crit.t_e2e_sim
    except AdHocNetError as exc:
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def _run_job(job):
    return run_member(*job)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidParameterError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_ensemble(spec: EnsembleSpec, workers: int | None = None) -> EnsembleTable:
    """Run every (N, realization) member; failed members are kept but flagged.

    ``workers`` defaults to the ``ADHOCNET_WORKERS`` environment variable (1).
    """
    workers = worker_count() if workers is None else workers
    jobs = [(spec, n, r) for n in spec.n_values for r in range(spec.realizations)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            members = list(pool.map(_run_job, jobs))
    else:
        members = [_run_job(j) for j in jobs]
    for m in members:
        if not m.ok:
            warnings.warn(f"member N={m.n} realization={m.realization} excluded: {m.error}",
                          RuntimeWarning, stacklevel=2)
    return EnsembleTable(spec, members)


# -- power-law fits -------------------------------------------------------------

@dataclass(frozen=True)
class ScalingFit:
    n0: int
    gamma: float
    prefactor: float
    fit_window: tuple[int, int]
    residual: float

    def predict(self, n):
        return self.prefactor * (np.asarray(n, dtype=float) - self.n0) ** self.gamma


def fit_scaling(n_values, t_values, window: tuple[int | None, int | None] = (None, None)
                ) -> ScalingFit:
    """Fit ``t = c (N - N0)^gamma`` by a grid over integer ``N0``.

    For every ``N0`` in ``[0, min(N) - 1]`` a least-squares line through
    ``log t`` against ``log(N - N0)`` is fitted; the ``N0`` with the smallest
    RMS log-residual wins (smallest ``N0`` on ties).  ``window`` restricts
    the points used to ``lo <= N <= hi``.
    """
    n = np.asarray(n_values, dtype=float)
    t = np.asarray(t_values, dtype=float)
    if n.shape != t.shape:
        raise FitError("N and t must have the same length")
    lo, hi = window
    keep = np.ones(len(n), dtype=bool)
    if lo is not None:
        keep &= n >= lo
    if hi is not None:
        keep &= n <= hi
    n, t = n[keep], t[keep]
    if len(n) < 4:
        raise FitError(f"need at least 4 points in the fit window, got {len(n)}")
    if np.any(~np.isfinite(t)) or np.any(t <= 0):
        raise FitError("throughput values must be finite and positive")
    y = np.log(t)
    best = None
    for n0 in range(int(n.min())):
        x = np.log(n - n0)
        slope, icpt = np.polyfit(x, y, 1)
        rms = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
        if best is None or rms < best[0] - 1e-15:
            best = (rms, n0, float(slope), float(np.exp(icpt)))
    rms, n0, gamma, pref = best
    return ScalingFit(n0, gamma, pref, (int(n.min()), int(n.max())), rms)


def fit_table(table: EnsembleTable, quantity: str = "t_est",
              window: tuple[int | None, int | None] = (None, None)) -> ScalingFit:
    rows = table.summary()
    return fit_scaling([r.n for r in rows], [getattr(r, quantity) for r in rows], window)


def write_fit_csv(path, fits: dict[str, ScalingFit]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "n0", "gamma", "prefactor", "n_lo", "n_hi", "residual"])
        for kind, f in fits.items():
            w.writerow([kind, f.n0, repr(f.gamma), repr(f.prefactor), *f.fit_window, repr(f.residual)])


# -- comparisons ----------------------------------------------------------------

@dataclass
class ComparisonRow:
    n: int
    numerator: float
    denominator: float
    ratio: float
    ratio_se: float


def compare_runs(numerator: EnsembleTable, denominator: EnsembleTable,
                 quantity: str = "t_est") -> list[ComparisonRow]:
    """Ratio of ensemble means per shared N, with a first-order standard error."""
    a = {r.n: r for r in numerator.summary()}
    b = {r.n: r for r in denominator.summary()}
    shared = sorted(set(a) & set(b))
    if not shared:
        raise InvalidParameterError("the tables share no N value")
    rows = []
    for n in shared:
        ma, sa = getattr(a[n], quantity), getattr(a[n], quantity + "_se")
        mb, sb = getattr(b[n], quantity), getattr(b[n], quantity + "_se")
        ratio = ma / mb
        rel = [s / m for s, m in ((sa, ma), (sb, mb)) if not math.isnan(s)]
        se = ratio * math.sqrt(sum(x * x for x in rel)) if rel else math.nan
        rows.append(ComparisonRow(n, ma, mb, ratio, se))
    return rows


def write_comparison_csv(path, rows: list[ComparisonRow]) -> None:
    cols = [f.name for f in fields(ComparisonRow)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(getattr(r, c)) for c in cols])


def series_ratio(series_list) -> tuple[np.ndarray, np.ndarray]:
    """Per-round mean and standard error of ``series[k] / series[0]`` over runs."""
    arr = np.asarray(series_list, dtype=float)
    ratios = arr / arr[:, :1]
    se = ratios.std(axis=0, ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else np.full(arr.shape[1], math.nan)
    return ratios.mean(axis=0), se
