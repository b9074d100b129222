"""``dpr0`` command line: thin argparse layer over the library.

Exit codes: 0 ok, 2 argument/validation error, 3 infeasible privacy budget,
4 numeric failure. Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .accuracy import accuracy_report, output_error_moments
from .epidemic import EpidemicSystem, check_penetration, simulate, write_trajectory_csv
from .errors import ArgumentError, DPR0Error
from .experiment import (
    BY_GRAPH_COLUMNS,
    ERRORS_COLUMNS,
    HIST_COLUMNS,
    OUTPUT_FILES,
    PEN_COLUMNS,
    SIR_COLUMNS,
    ExperimentConfig,
    penetration_row,
    run_and_write,
    write_csv,
    write_rows,
)
from .graph import WeightBounds, random_connected_graph, read_graph, serialize_graph
from .mechanisms import (
    DEFAULT_MODE,
    MODES,
    PrivacyBudget,
    calibrate_gaussian,
    calibrate_laplace,
    input_perturb,
    output_perturb,
    r0_cap_from_bounds,
)
from .numerics import seeded_rng
from .spectral import spectral_radius


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


def _emit(obj, fh=None):
    fh = fh or sys.stdout
    fh.write(json.dumps(obj, indent=2) + "\n")


def _epsilon_list(text):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad epsilon list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty epsilon list")
    return vals


def _budget(args):
    return PrivacyBudget(args.epsilon, args.k)


def _load(args):
    gf = read_graph(args.graph)
    return gf.graph, gf.bounds


# -- subcommands ------------------------------------------------------------------


def cmd_gen_graph(args):
    g = random_connected_graph(args.n, args.edges, args.wmax, args.seed)
    bounds = WeightBounds.uniform(args.n, 0.0, args.wmax)
    glob = None if args.format == "json" else (0.0, args.wmax)
    text = serialize_graph(g, bounds, args.format, global_bounds=glob)
    r0 = spectral_radius(g.weights).value
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise ArgumentError(f"cannot write {args.out}: {exc.strerror}") from None
        _emit({"out": args.out, "n": g.n, "n_w": g.n_w, "r0": r0})
    else:
        sys.stdout.write(text)
        sys.stderr.write(f"r0={r0!r}\n")
    return 0


def cmd_release(args):
    graph, bounds = _load(args)
    budget = _budget(args)
    rng = seeded_rng(args.seed, 0)
    report = {"mechanism": args.mechanism}
    if args.mechanism == "input":
        directed = not graph.symmetric
        cal = calibrate_gaussian(bounds, graph.pattern, budget, args.mode, directed=directed)
        r0_priv = spectral_radius(input_perturb(graph, bounds, cal, rng, directed).weights).value
        # data-independent outer bounds are safe to publish
        acc = {
            "outer_mean_bound": cal.sigma * math.sqrt(graph.n_w),
            "outer_var_bound": cal.sigma**2 * graph.n_w,
            "log_tail_c": math.log(2.0) + 2 * graph.n * math.log(9.0),
        }
        if args.reveal_true:
            r0 = spectral_radius(graph.weights).value
            acc.update(accuracy_report(graph, bounds, cal.sigma, confidence=args.confidence, r0=r0).to_dict())
    else:
        cap = args.r0_cap if args.r0_cap is not None else r0_cap_from_bounds(bounds, graph.pattern)
        cal = calibrate_laplace(budget, cap)
        r0 = spectral_radius(graph.weights).value
        r0_priv = output_perturb(r0, cal, rng)
        acc = {"outer_mean_bound": cal.b, "outer_mse_bound": 2.0 * cal.b**2}
        if args.reveal_true:
            mae, mse = output_error_moments(r0, cal.b, cap)
            acc.update({"expected_abs_err": mae, "expected_sq_err": mse})
    report["calibration"] = cal.to_dict()
    report["r0_private"] = r0_priv
    report["accuracy"] = acc
    if args.reveal_true:
        report["r0"] = r0
        report["r0_sensitive"] = True
    _emit(report)
    return 0


def cmd_bounds(args):
    graph, bounds = _load(args)
    if args.sigma is not None:
        sigma, cal = args.sigma, None
    else:
        if args.epsilon is None or args.k is None:
            raise ArgumentError("give either --sigma or both --epsilon and --k")
        cal = calibrate_gaussian(bounds, graph.pattern, _budget(args), args.mode, directed=not graph.symmetric)
        sigma = cal.sigma
    out = {
        "sigma": sigma,
        "n": graph.n,
        "n_w": graph.n_w,
        "outer_mean_bound": sigma * math.sqrt(graph.n_w),
        "outer_var_bound": sigma**2 * graph.n_w,
        "log_tail_c": math.log(2.0) + 2 * graph.n * math.log(9.0),
    }
    if cal is not None:
        out["calibration"] = cal.to_dict()
    if args.reveal_true:
        r0 = spectral_radius(graph.weights).value
        rep = accuracy_report(graph, bounds, sigma, confidence=None if args.t else args.confidence, t=args.t, r0=r0)
        out["report"] = rep.to_dict()
        out["r0"] = r0
    _emit(out)
    return 0


def cmd_simulate(args):
    graph, _ = _load(args)
    gamma = np.full(graph.n, args.gamma)
    system = EpidemicSystem(args.gamma * graph.weights, gamma, args.kind)
    res = simulate(system, x0=np.full(graph.n, args.x0), step=args.step, t_max=args.t_max, stride=args.stride)
    if args.trajectory:
        if res.trajectory is None:
            raise ArgumentError("--trajectory needs --stride")
        with open(args.trajectory, "w", encoding="utf-8", newline="") as fh:
            write_trajectory_csv(res.trajectory, graph.n, fh)
    f = res.final
    out = {
        "kind": system.kind,
        "t": f.t,
        "steps": res.steps,
        "equilibrium": res.equilibrium,
        "min_s": float(np.min(f.s)),
        "s": f.s.tolist(),
        "x": f.x.tolist(),
        "r": f.r.tolist(),
    }
    if args.reveal_true:
        r0 = spectral_radius(graph.weights).value
        out["r0"] = r0
        if res.equilibrium:
            chk = check_penetration(f, r0)
            out["penetration"] = {"min_s": chk.min_s, "bound": chk.bound, "holds": chk.holds}
    _emit(out)
    return 0


def cmd_validate_penetration(args):
    if args.graph:
        graph, bounds = _load(args)
        graphs = [(graph, bounds)]
    else:
        graphs = [
            (random_connected_graph(args.n, args.edges, args.wmax, seeded_rng(args.seed, 0, gid)),
             WeightBounds.uniform(args.n, 0.0, args.wmax))
            for gid in range(args.graphs)
        ]
    rows = []
    for gid, (g, b) in enumerate(graphs):
        budget = _budget(args)
        rng = seeded_rng(args.seed, 1, gid)
        r0 = spectral_radius(g.weights).value
        if args.mechanism == "input":
            cal = calibrate_gaussian(b, g.pattern, budget, args.mode, directed=not g.symmetric)
            r0_priv = spectral_radius(input_perturb(g, b, cal, rng).weights).value
        else:
            cap = args.r0_cap if args.r0_cap is not None else r0_cap_from_bounds(b, g.pattern)
            r0_priv = output_perturb(r0, calibrate_laplace(budget, cap), rng)
        row = penetration_row(gid, g, r0, r0_priv, args.gamma, args.step, args.kind, args.x0)
        if args.graph and not args.reveal_true:
            for key in ("r0", "inv_r0", "holds_true_bound"):
                row[key] = None
        rows.append(row)
    cols = SIR_COLUMNS + ("equilibrium",)
    if args.out:
        write_csv(args.out, cols, rows)
    else:
        write_rows(sys.stdout, cols, rows)
    return 0


EXPERIMENT_KEYS = {
    "base_seed", "n", "n_e", "w_max", "k", "epsilons", "trials", "graphs", "mechanism", "directed",
    "out_dir", "mode", "r0_cap", "gamma", "confidence", "hist_bins", "hist_graph", "workers", "sir_step",
    "graph_file",
}


def cmd_experiment(args):
    cfg_dict = {}
    if args.config:
        cfg_dict.update(_read_config(args.config))
    for key in EXPERIMENT_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            cfg_dict[key] = val
    cfg = ExperimentConfig.from_dict(cfg_dict)
    written = run_and_write(cfg)
    _emit({"out_dir": cfg.out_dir, "files": written})
    return 0


def _read_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ArgumentError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"config {path}: invalid JSON at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ArgumentError("config file must hold a JSON object")
    return doc


# -- parser ---------------------------------------------------------------------------

EXPERIMENT_EPILOG = "CSV files (column order):\n" + "\n".join(
    f"  {OUTPUT_FILES[key]}: {','.join(cols)}"
    for key, cols in (("errors", ERRORS_COLUMNS), ("by_graph", BY_GRAPH_COLUMNS), ("histogram", HIST_COLUMNS),
                      ("penetration", PEN_COLUMNS), ("sir", SIR_COLUMNS))
) + "\nFloats use 17 significant digits, '.' decimals and '\\n' line endings."


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpr0", description="Differentially private release of R0 = rho(W).")
    p.add_argument("--version", action="version", version=f"dpr0 {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("graph", help="graph file (.csv edge list or .json dense)")
        sp.add_argument("--config", help="JSON file with option defaults; flags win")
        sp.add_argument("--reveal-true", action="store_true",
                        help="also print the true R0 and data-dependent bounds (sensitive)")

    def budget(sp, required=True):
        sp.add_argument("--epsilon", type=float, required=required, default=None)
        sp.add_argument("--k", type=float, required=required, default=None, help="weight-adjacency radius")
        sp.add_argument("--mode", choices=MODES, default=DEFAULT_MODE, help="Delta C bound for the input mechanism")

    g = sub.add_parser("gen-graph", help="write a random connected graph as an edge list")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--edges", type=int, required=True, help="off-diagonal undirected edges")
    g.add_argument("--wmax", type=float, default=3.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--out")
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen_graph)

    r = sub.add_parser("release", help="privatize R0 and print a JSON report")
    common(r)
    budget(r)
    r.add_argument("--mechanism", choices=("input", "output"), default="input")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--r0-cap", type=float, default=None, help="domain cap for the output mechanism")
    r.add_argument("--confidence", type=float, default=0.92)
    r.set_defaults(func=cmd_release)

    b = sub.add_parser("bounds", help="evaluate the accuracy bounds for a noise scale")
    common(b)
    budget(b, required=False)
    b.add_argument("--sigma", type=float, default=None)
    b.add_argument("--t", type=float, default=None, help="penetration deviation t")
    b.add_argument("--confidence", type=float, default=0.92, help="pick t for this confidence")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", help="run SIS/SIR dynamics with B = gamma W")
    common(s)
    s.add_argument("--kind", choices=("SIS", "SIR"), default="SIR")
    s.add_argument("--gamma", type=float, default=1.0)
    s.add_argument("--x0", type=float, default=0.01)
    s.add_argument("--step", type=float, default=0.01)
    s.add_argument("--t-max", type=float, default=2000.0)
    s.add_argument("--stride", type=int, default=None)
    s.add_argument("--trajectory", help="CSV path for t,s_*,x_*,r_* samples")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate-penetration", help="compare min s* with 1/R0 and the private 1/R0",
                       epilog="columns: " + ",".join(SIR_COLUMNS + ("equilibrium",)))
    v.add_argument("graph", nargs="?", help="graph file; random graphs when omitted")
    v.add_argument("--config")
    v.add_argument("--reveal-true", action="store_true")
    budget(v, required=False)
    v.set_defaults(epsilon=10.0, k=3.0)
    v.add_argument("--mechanism", choices=("input", "output"), default="input")
    v.add_argument("--r0-cap", type=float, default=None)
    v.add_argument("--graphs", type=int, default=10)
    v.add_argument("--n", type=int, default=20)
    v.add_argument("--edges", type=int, default=100)
    v.add_argument("--wmax", type=float, default=3.0)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--kind", choices=("SIS", "SIR"), default="SIR")
    v.add_argument("--gamma", type=float, default=1.0)
    v.add_argument("--x0", type=float, default=0.01)
    v.add_argument("--step", type=float, default=0.01)
    v.add_argument("--out")
    v.set_defaults(func=cmd_validate_penetration)

    e = sub.add_parser("experiment", help="epsilon sweep for both mechanisms, written as CSV",
                       epilog=EXPERIMENT_EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    e.add_argument("--config", help="JSON object with ExperimentConfig fields; flags win")
    e.add_argument("--seed", dest="base_seed", type=int)
    e.add_argument("--n", type=int)
    e.add_argument("--edges", dest="n_e", type=int)
    e.add_argument("--wmax", dest="w_max", type=float)
    e.add_argument("--k", type=float)
    e.add_argument("--epsilons", type=_epsilon_list, help="comma separated, e.g. 1,2,5")
    e.add_argument("--trials", type=int)
    e.add_argument("--graphs", type=int)
    e.add_argument("--mechanism", choices=("input", "output", "both"))
    e.add_argument("--directed", action="store_true", default=None)
    e.add_argument("--out-dir", dest="out_dir")
    e.add_argument("--mode", choices=MODES)
    e.add_argument("--r0-cap", dest="r0_cap", type=float)
    e.add_argument("--gamma", type=float)
    e.add_argument("--confidence", type=float)
    e.add_argument("--hist-bins", dest="hist_bins", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--sir-step", dest="sir_step", type=float)
    e.add_argument("--graph", dest="graph_file")
    e.set_defaults(func=cmd_experiment)
    return p


def _apply_config(parser, argv):
    """Parse ``argv`` with the --config file's values as subcommand defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    sub = parser._subparsers._group_actions[0].choices.get(argv[0]) if argv else None
    if known.config and sub is not None and argv[0] != "experiment":
        doc = _read_config(known.config)
        dests = {a.dest for a in sub._actions}
        unknown = set(doc) - dests
        if unknown:
            raise ArgumentError(f"unknown config keys for {argv[0]}: {sorted(unknown)}")
        sub.set_defaults(**doc)
        # required options may now come from the file
        for action in sub._actions:
            if action.dest in doc:
                action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except DPR0Error as exc:
        _emit({"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}, sys.stderr)
        return exc.exit_code
    except OSError as exc:
        _emit({"error": "IOError", "message": f"{exc.filename or ''}: {exc.strerror}", "exit_code": 2}, sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
