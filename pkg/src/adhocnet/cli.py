"""Command-line entry point: ``adhocnet <command> ...``.

Each command reads and writes plain files and leaves a JSON manifest next to
its primary output recording the argument vector, working directory, derived
seeds and library versions.  ``adhocnet replay <manifest>`` re-runs it.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from adhocnet import __version__
from adhocnet.errors import AdHocNetError, InvalidParameterError, SimConfigError

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _versions() -> dict:
    import numba
    import scipy
    return {"adhocnet": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


def _write_manifest(args, outputs: list[Path], seeds: dict) -> Path:
    path = Path(args.manifest) if args.manifest else Path(f"{outputs[0]}.manifest.json")
    doc = {
        "command": args.command,
        "argv": args.argv,
        "cwd": os.getcwd(),
        "seeds": seeds,
        "outputs": [str(p) for p in outputs],
        "versions": _versions(),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_net(path):
    from adhocnet.geomnet import AdHocNetwork
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"network file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None
    try:
        return AdHocNetwork.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path} is not a network file: {exc}") from None


def _save_net(net, path) -> None:
    Path(path).write_text(json.dumps(net.to_dict(), sort_keys=True) + "\n", encoding="utf-8")


def _routes(net, args, seeds):
    """Route table chosen by ``--routes`` file or ``--routing``."""
    from adhocnet.metricroute import metric_routing, read_routes
    from adhocnet.paths import hopcount_routes
    from adhocnet.seeding import substream
    if getattr(args, "routes", None):
        return read_routes(args.routes, net.n), "explicit"
    if args.routing == "metric":
        seed = None
        if args.order == "random":
            seed = seeds["routing"] = substream(args.seed, "routing")
        return metric_routing(net, args.rounds, args.order, seed).routes, "metric-routing"
    return hopcount_routes(net), "hop-count"


# -- commands -------------------------------------------------------------------

def cmd_generate(args):
    from adhocnet.geomnet import RadioParams, build_min_degree_network, generate_layout
    from adhocnet.seeding import substream
    layout_seed = substream(args.seed, "layout")
    net = build_min_degree_network(generate_layout(args.n, layout_seed),
                                   RadioParams(args.alpha, args.snr), args.kmin)
    _save_net(net, args.out)
    print(f"N={net.n} k_min={args.kmin} mean degree {net.degree().mean():.3f}")
    return [Path(args.out)], {"layout": layout_seed}


def cmd_estimate(args):
    from adhocnet.capacity import estimate_throughput
    from adhocnet.paths import betweenness, cumulative_betweenness
    net = _load_net(args.net)
    seeds = {}
    routes, _ = _routes(net, args, seeds)
    cv = cumulative_betweenness(net, betweenness(net, routes))
    est = estimate_throughput(net, cv)
    doc = {"t_e2e": est.t_e2e, "bottleneck": est.bottleneck, "max_b_cum": float(cv.B_cum.max())}
    print(repr(est.t_e2e))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
        return [Path(args.out)], seeds
    return [], seeds


def cmd_optimize(args):
    from adhocnet.seeding import substream
    from adhocnet.structopt import OptimizerConfig, optimize
    net = _load_net(args.net)
    seeds = {"optimizer": substream(args.seed, "optimizer"),
             "perturbation": substream(args.seed, "perturbation")}
    cfg = OptimizerConfig(n_perturb=args.n_perturb, max_meta_rounds=args.meta_rounds,
                          stop_after_first_local_max=args.meta_rounds == 0,
                          seed=seeds["optimizer"], perturb_seed=seeds["perturbation"])
    trace = optimize(net, cfg)
    _save_net(trace.network, args.out)
    outputs = [Path(args.out)]
    if args.trace:
        trace.write_csv(args.trace)
        outputs.append(Path(args.trace))
    if args.links:
        trace.write_added_links(args.links)
        outputs.append(Path(args.links))
    print(f"{trace.initial_objective!r} -> {trace.best_objective!r} "
          f"({len(trace.added_links)} links added)")
    return outputs, seeds


def cmd_greedy(args):
    from adhocnet.structopt import greedy
    net = _load_net(args.net)
    res = greedy(net, args.rounds, args.attempt)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("round,t_e2e,raised,lowered\n")
        for k, v in enumerate(res.series):
            up = len(res.raised[k - 1]) if k else 0
            down = len(res.lowered[k - 1]) if k else 0
            fh.write(f"{k},{v!r},{up},{down}\n")
    print(" ".join(f"{v:.4f}" for v in res.series))
    return [Path(args.out)], {}


def cmd_route(args):
    from adhocnet.metricroute import metric_routing, write_routes
    from adhocnet.seeding import substream
    net = _load_net(args.net)
    seeds = {}
    seed = None
    if args.order == "random":
        seed = seeds["routing"] = substream(args.seed, "routing")
    state = metric_routing(net, args.rounds, args.order, seed)
    write_routes(state, args.out)
    print(repr(state.throughput()))
    return [Path(args.out)], seeds


def _sim_config(args, mu, seeds):
    from adhocnet.seeding import substream
    from adhocnet.trafficsim import SimConfig
    seeds["simulator"] = substream(args.seed, "simulator")
    return SimConfig(mu=mu, horizon=args.horizon, warmup=args.warmup, seed=seeds["simulator"])


def cmd_simulate(args):
    from adhocnet.trafficsim import classify_criticality, simulate
    net = _load_net(args.net)
    seeds = {}
    cfg = _sim_config(args, args.mu, seeds)
    routes, source = _routes(net, args, seeds)
    cfg = replace(cfg, route_source=source)
    out = simulate(net, routes, cfg)
    out.write_csv(args.out)
    verdict = classify_criticality(out)
    summary = {"mu": args.mu, "verdict": verdict, "delivered_per_step": out.delivered_per_step,
               "created": int(out.created.sum()), "delivered": int(out.delivered.sum())}
    print(json.dumps(summary, sort_keys=True))
    return [Path(args.out)], seeds


def cmd_critical(args):
    from adhocnet.trafficsim import find_critical_rate
    net = _load_net(args.net)
    seeds = {}
    cfg = _sim_config(args, 0.0, seeds)
    routes, source = _routes(net, args, seeds)
    cfg = replace(cfg, route_source=source)
    res = find_critical_rate(net, routes, cfg, rel_tol=args.rel_tol)
    doc = {"mu_lo": res.mu_lo, "mu_hi": res.mu_hi, "mu_crit": res.mu_crit,
           "t_e2e_sim": res.t_e2e_sim, "width": res.width,
           "probes": [[mu, v] for mu, v in res.probes]}
    Path(args.out).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(repr(res.t_e2e_sim))
    return [Path(args.out)], seeds


def cmd_ensemble(args):
    from adhocnet.analysis import EnsembleSpec, run_ensemble
    spec = EnsembleSpec(args.kind, tuple(args.n), args.realizations, k_min=args.kmin,
                        optimized=args.optimized, routing=args.routing, simulate=args.simulate,
                        seed=args.seed, metric_rounds=args.rounds, sim_horizon=args.horizon,
                        sim_warmup=args.warmup)
    table = run_ensemble(spec, workers=args.workers)
    table.write_csv(args.out)
    outputs = [Path(args.out)]
    if args.summary:
        table.write_summary_csv(args.summary)
        outputs.append(Path(args.summary))
    for r in table.summary():
        print(f"N={r.n} count={r.count} t_est={r.t_est:.4f} t_sim={r.t_sim:.4f}")
    return outputs, {"ensemble": args.seed}


def cmd_fit(args):
    from adhocnet.analysis import fit_table, write_fit_csv
    fits = {}
    for path in args.table:
        table = _read_table(path)
        fits[table.spec.kind] = fit_table(table, args.quantity, (args.n_min, args.n_max))
    write_fit_csv(args.out, fits)
    for kind, f in fits.items():
        print(f"{kind}: N0={f.n0} gamma={f.gamma:.4f} residual={f.residual:.4g}")
    return [Path(args.out)], {}


def cmd_compare(args):
    from adhocnet.analysis import compare_runs, write_comparison_csv
    rows = compare_runs(_read_table(args.numerator), _read_table(args.denominator), args.quantity)
    write_comparison_csv(args.out, rows)
    for r in rows:
        print(f"N={r.n} ratio={r.ratio:.4f} +- {r.ratio_se:.4f}")
    return [Path(args.out)], {}


def _read_table(path):
    from adhocnet.analysis import EnsembleTable
    if not Path(path).exists():
        raise UsageError(f"table not found: {path}")
    try:
        return EnsembleTable.read_csv(path)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"{path} is not an ensemble table: {exc}") from None


def cmd_replay(args):
    try:
        doc = json.loads(Path(args.manifest_file).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest: {exc}") from None
    here = os.getcwd()
    os.chdir(doc["cwd"])
    try:
        code = main(doc["argv"])
    finally:
        os.chdir(here)
    if code != EXIT_OK:
        raise SystemExit(code)
    return None


# -- parser ---------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _add_routing(p, explicit=True):
    p.add_argument("--routing", choices=["hop-count", "metric"], default="hop-count")
    p.add_argument("--rounds", type=_positive_int, default=2, help="metric-routing iteration rounds")
    p.add_argument("--order", choices=["ascending", "random"], default="ascending")
    if explicit:
        p.add_argument("--routes", help="explicit route file (overrides --routing)")


def _add_sim(p):
    p.add_argument("--horizon", type=_positive_int, default=20_000)
    p.add_argument("--warmup", type=int, default=2_000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adhocnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        if name != "replay":
            p.add_argument("--seed", type=int, default=0, help="global seed")
            p.add_argument("--manifest", help="manifest path (default: <output>.manifest.json)")
        return p

    p = command("generate", cmd_generate, "build a minimum-degree network")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--kmin", type=_positive_int, default=8)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--snr", type=float, default=1.0)
    p.add_argument("--out", required=True)

    p = command("estimate", cmd_estimate, "analytic end-to-end throughput")
    p.add_argument("--net", required=True)
    _add_routing(p)
    p.add_argument("--out")

    p = command("optimize", cmd_optimize, "climb the throughput estimate by power moves")
    p.add_argument("--net", required=True)
    p.add_argument("--meta-rounds", type=int, default=0)
    p.add_argument("--n-perturb", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.add_argument("--links")

    p = command("greedy", cmd_greedy, "run a local tag-and-move heuristic")
    p.add_argument("--net", required=True)
    p.add_argument("--attempt", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--rounds", type=_positive_int, default=6)
    p.add_argument("--out", required=True)

    p = command("route", cmd_route, "load-aware routes, written as a route file")
    p.add_argument("--net", required=True)
    p.add_argument("--rounds", type=_positive_int, default=2)
    p.add_argument("--order", choices=["ascending", "random"], default="ascending")
    p.add_argument("--out", required=True)

    p = command("simulate", cmd_simulate, "packet simulation at one creation rate")
    p.add_argument("--net", required=True)
    p.add_argument("--mu", type=float, required=True)
    _add_routing(p)
    _add_sim(p)
    p.add_argument("--out", required=True)

    p = command("critical", cmd_critical, "bisect the critical packet creation rate")
    p.add_argument("--net", required=True)
    _add_routing(p)
    _add_sim(p)
    p.add_argument("--rel-tol", type=float, default=0.05)
    p.add_argument("--out", required=True)

    p = command("ensemble", cmd_ensemble, "throughput over many random networks")
    p.add_argument("--n", type=_positive_int, nargs="+", required=True)
    p.add_argument("--realizations", type=_positive_int, default=10)
    p.add_argument("--kmin", type=_positive_int, default=8)
    p.add_argument("--kind", default="ensemble")
    p.add_argument("--optimized", action="store_true")
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--workers", type=_positive_int, default=None,
                   help="worker processes (default: $ADHOCNET_WORKERS or 1)")
    _add_routing(p, explicit=False)
    _add_sim(p)
    p.add_argument("--out", required=True)
    p.add_argument("--summary")

    p = command("fit", cmd_fit, "fit t = c (N - N0)^gamma to ensemble tables")
    p.add_argument("--table", nargs="+", required=True)
    p.add_argument("--quantity", choices=["t_est", "t_sim"], default="t_est")
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--out", required=True)

    p = command("compare", cmd_compare, "ratio of two ensemble tables per N")
    p.add_argument("--numerator", required=True)
    p.add_argument("--denominator", required=True)
    p.add_argument("--quantity", choices=["t_est", "t_sim"], default="t_est")
    p.add_argument("--out", required=True)

    p = command("replay", cmd_replay, "re-run a command from its manifest")
    p.add_argument("manifest_file")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        result = args.func(args)
        if result is not None:
            outputs, seeds = result
            if outputs or args.manifest:
                _write_manifest(args, outputs, seeds)
    except (UsageError, InvalidParameterError, SimConfigError) as exc:
        print(f"adhocnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AdHocNetError, OSError) as exc:
        print(f"adhocnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SystemExit as exc:
        return int(exc.code or 0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
