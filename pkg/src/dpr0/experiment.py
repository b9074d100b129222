"""Privacy/accuracy sweep over epsilon for both mechanisms, written as CSV files.

Every trial draws from its own stream ``seeded_rng(base_seed, mech, graph_id,
trial_id)``. The stream does not depend on epsilon, so all points of a sweep
share common random numbers and differences between epsilons are not masked by
sampling noise. Results are merged in (graph_id, trial_id) order, so the worker
count never changes the output bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .accuracy import accuracy_report, output_error_moments, output_interval_mass
from .epidemic import PENETRATION_TOL, EpidemicSystem, check_penetration, simulate
from .errors import ArgumentError
from .graph import WeightBounds, WeightedGraph, random_connected_graph, read_graph
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

STREAM_GRAPH, STREAM_INPUT, STREAM_OUTPUT = 0, 1, 2
MECHS = ("input", "output", "both")

ERRORS_COLUMNS = ("epsilon", "mech", "mean_abs_err", "std", "analytic_mean_bound", "expected_abs_err", "samples")
BY_GRAPH_COLUMNS = ("epsilon", "mech", "graph_id", "r0", "mean_abs_err", "var_abs_err", "analytic_mean_bound",
                    "analytic_var_bound", "expected_abs_err", "expected_sq_err", "scale")
HIST_COLUMNS = ("epsilon", "mech", "graph_id", "bin_lo", "bin_hi", "count")
PEN_COLUMNS = ("epsilon", "mech", "graph_id", "mean_abs_inv_err", "std", "t", "threshold", "confidence",
               "empirical_freq")
SIR_COLUMNS = ("graph_id", "r0", "r0_private", "inv_r0", "inv_r0_private", "min_s", "holds_true_bound",
               "holds_private_bound")

OUTPUT_FILES = {
    "errors": "errors.csv",
    "by_graph": "errors_by_graph.csv",
    "histogram": "histogram.csv",
    "penetration": "penetration.csv",
    "sir": "sir_validation.csv",
}


@dataclass
class ExperimentConfig:
    base_seed: int = 0
    n: int = 20
    n_e: int = 100
    w_max: float = 3.0
    k: float = 3.0
    epsilons: list = field(default_factory=lambda: [float(e) for e in range(1, 11)])
    trials: int = 200
    graphs: int = 5
    mechanism: str = "both"
    directed: bool = False
    out_dir: str = "experiment_out"
    mode: str = DEFAULT_MODE
    r0_cap: float | None = None
    gamma: float = 1.0 / 3.0
    confidence: float = 0.92
    hist_bins: int = 40
    hist_graph: int = 0
    workers: int = 1
    sir_step: float = 0.01
    graph_file: str | None = None

    def __post_init__(self):
        self.epsilons = [float(e) for e in self.epsilons]
        if not self.epsilons or any(not (e > 0 and math.isfinite(e)) for e in self.epsilons):
            raise ArgumentError("epsilon grid must be nonempty and positive")
        if self.trials < 1 or self.graphs < 1:
            raise ArgumentError("trials and graphs must be at least 1")
        if self.mechanism not in MECHS:
            raise ArgumentError(f"mechanism must be one of {MECHS}")
        if self.mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}")
        if not 0 < self.confidence < 1:
            raise ArgumentError("confidence must lie in (0, 1)")
        if self.workers < 1 or self.hist_bins < 1:
            raise ArgumentError("workers and hist_bins must be positive")
        if not self.k > 0 or not self.gamma > 0:
            raise ArgumentError("k and gamma must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def mechs(self) -> tuple[str, ...]:
        return ("input", "output") if self.mechanism == "both" else (self.mechanism,)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def _load_graphs(cfg: ExperimentConfig):
    if cfg.graph_file:
        gf = read_graph(cfg.graph_file)
        g, b = gf.graph, gf.bounds
        if cfg.directed and g.symmetric:
            g = WeightedGraph(g.weights, symmetric=False)
        return [(g, b)]
    out = []
    for gid in range(cfg.graphs):
        g = random_connected_graph(cfg.n, cfg.n_e, cfg.w_max, seeded_rng(cfg.base_seed, STREAM_GRAPH, gid))
        if cfg.directed:
            g = WeightedGraph(g.weights, symmetric=False)
        out.append((g, WeightBounds.uniform(cfg.n, 0.0, cfg.w_max)))
    return out


def _output_inv_prob(r0, b, cap, tau):
    """P[|1/R~ - 1/R0| < tau] under the truncated Laplace release."""
    lo = 1.0 / (1.0 / r0 + tau)
    inv_hi = 1.0 / r0 - tau
    hi = cap if inv_hi <= 0 else min(cap, 1.0 / inv_hi)
    return output_interval_mass(r0, b, cap, lo, hi)


def penetration_row(graph_id: int, graph: WeightedGraph, r0: float, r0_private: float, gamma: float,
                    step: float = 0.01, kind: str = "SIR", x0: float = 0.01) -> dict:
    """Simulate the epidemic on ``graph`` (B = gamma W, Gamma = gamma I) and test
    min s* against both the true and the privatized 1/R0."""
    system = EpidemicSystem(gamma * graph.weights, np.full(graph.n, gamma), kind)
    res = simulate(system, x0=np.full(graph.n, x0), step=step, t_max=2000.0 / gamma)
    row = {
        "graph_id": graph_id,
        "r0": r0,
        "r0_private": r0_private,
        "inv_r0": 1.0 / r0,
        "inv_r0_private": 1.0 / r0_private,
        "min_s": float(np.min(res.final.s)),
        "holds_true_bound": None,
        "holds_private_bound": None,
        "equilibrium": res.equilibrium,
    }
    if res.equilibrium:
        chk = check_penetration(res.final, r0)
        row["holds_true_bound"] = chk.holds
        row["holds_private_bound"] = chk.min_s <= 1.0 / r0_private + PENETRATION_TOL
    return row


def _run_graph(args):
    cfg, gid, graph, bounds = args
    directed = not graph.symmetric
    r0 = spectral_radius(graph.weights).value
    cap = cfg.r0_cap if cfg.r0_cap is not None else r0_cap_from_bounds(bounds, graph.pattern)
    if r0 > cap:
        raise ArgumentError(f"R0 cap {cap!r} lies below R0 for graph {gid}")
    per_eps = []
    for eps in cfg.epsilons:
        budget = PrivacyBudget(eps, cfg.k)
        entry = {"epsilon": eps}
        if "input" in cfg.mechs:
            cal = calibrate_gaussian(bounds, graph.pattern, budget, cfg.mode, directed=directed)
            samples = np.empty(cfg.trials)
            for t in range(cfg.trials):
                g_t = input_perturb(graph, bounds, cal, seeded_rng(cfg.base_seed, STREAM_INPUT, gid, t), directed)
                samples[t] = spectral_radius(g_t.weights).value
            rep = accuracy_report(graph, bounds, cal.sigma, confidence=cfg.confidence, r0=r0)
            entry["input"] = {"samples": samples, "scale": cal.sigma, "report": rep}
        if "output" in cfg.mechs and cfg.k < cap:
            lcal = calibrate_laplace(budget, cap)
            samples = np.array([
                output_perturb(r0, lcal, seeded_rng(cfg.base_seed, STREAM_OUTPUT, gid, t))
                for t in range(cfg.trials)
            ])
            mae, mse = output_error_moments(r0, lcal.b, cap)
            entry["output"] = {"samples": samples, "scale": lcal.b, "mae": mae, "mse": mse}
        per_eps.append(entry)

    # private R0 for the epidemic check: one release at the weakest privacy level
    last = per_eps[-1]
    mech = "input" if "input" in last else ("output" if "output" in last else None)
    r0_priv = float(last[mech]["samples"][0]) if mech else r0
    sir = penetration_row(gid, graph, r0, r0_priv, cfg.gamma, cfg.sir_step)
    return {"graph_id": gid, "r0": r0, "cap": cap, "per_eps": per_eps, "sir": sir}


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    graphs = _load_graphs(cfg)
    jobs = [(cfg, gid, g, b) for gid, (g, b) in enumerate(graphs)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_run_graph, jobs))
    return [_run_graph(j) for j in jobs]


def _tables(cfg: ExperimentConfig, results: list[dict]) -> dict:
    errors, by_graph, hist, pen = [], [], [], []
    hist_res = next((r for r in results if r["graph_id"] == cfg.hist_graph), results[0])
    edges = np.linspace(0.0, hist_res["cap"], cfg.hist_bins + 1)
    for ei, eps in enumerate(cfg.epsilons):
        for mech in cfg.mechs:
            pooled, bounds_, expected = [], [], []
            for res in results:
                entry = res["per_eps"][ei]
                if mech not in entry:
                    continue
                e = entry[mech]
                r0 = res["r0"]
                err = np.abs(e["samples"] - r0)
                pooled.append(err)
                inv_err = np.abs(1.0 / e["samples"] - 1.0 / r0)
                if mech == "input":
                    rep = e["report"]
                    mb, vb, exp_abs, exp_sq = rep.mean_bound, rep.var_bound, None, None
                    t, thr, conf = rep.t, rep.threshold, rep.confidence
                else:
                    b = e["scale"]
                    # E|X - R0| <= b and E(X - R0)^2 <= 2 b^2 hold for every truncation window
                    mb, vb, exp_abs, exp_sq = b, 2.0 * b * b, e["mae"], e["mse"]
                    inp = entry.get("input")
                    thr = inp["report"].threshold if inp else None
                    t = inp["report"].t if inp else None
                    conf = _output_inv_prob(r0, b, res["cap"], thr) if thr else None
                bounds_.append(mb)
                if exp_abs is not None:
                    expected.append(exp_abs)
                by_graph.append({
                    "epsilon": eps, "mech": mech, "graph_id": res["graph_id"], "r0": r0,
                    "mean_abs_err": err.mean(), "var_abs_err": err.var(), "analytic_mean_bound": mb,
                    "analytic_var_bound": vb, "expected_abs_err": exp_abs, "expected_sq_err": exp_sq,
                    "scale": e["scale"],
                })
                pen.append({
                    "epsilon": eps, "mech": mech, "graph_id": res["graph_id"],
                    "mean_abs_inv_err": inv_err.mean(), "std": inv_err.std(), "t": t, "threshold": thr,
                    "confidence": conf, "empirical_freq": None if thr is None else float(np.mean(inv_err < thr)),
                })
                if res is hist_res:
                    counts, _ = np.histogram(np.clip(e["samples"], edges[0], edges[-1]), bins=edges)
                    for lo, hi, c in zip(edges[:-1], edges[1:], counts):
                        hist.append({"epsilon": eps, "mech": mech, "graph_id": res["graph_id"],
                                     "bin_lo": lo, "bin_hi": hi, "count": int(c)})
            if not pooled:
                continue
            allerr = np.concatenate(pooled)
            errors.append({
                "epsilon": eps, "mech": mech, "mean_abs_err": allerr.mean(), "std": allerr.std(),
                "analytic_mean_bound": float(np.mean(bounds_)),
                "expected_abs_err": float(np.mean(expected)) if expected else None,
                "samples": allerr.size,
            })
    sir = [r["sir"] for r in results]
    return {
        "errors": (ERRORS_COLUMNS, errors),
        "by_graph": (BY_GRAPH_COLUMNS, by_graph),
        "histogram": (HIST_COLUMNS, hist),
        "penetration": (PEN_COLUMNS, pen),
        "sir": (SIR_COLUMNS, sir),
    }


def write_rows(fh, columns, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])


def write_csv(path: str, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        write_rows(fh, columns, rows)


def write_outputs(cfg: ExperimentConfig, results: list[dict]) -> dict:
    """Write every CSV atomically; on any failure no partial file is left behind."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    tables = _tables(cfg, results)
    written, temps = {}, []
    try:
        for key, (cols, rows) in tables.items():
            final = os.path.join(cfg.out_dir, OUTPUT_FILES[key])
            tmp = final + ".partial"
            temps.append(tmp)
            write_csv(tmp, cols, rows)
            written[key] = final
        for key, final in written.items():
            os.replace(final + ".partial", final)
    except BaseException:
        for tmp in temps:
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
    with open(os.path.join(cfg.out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return written


def run_and_write(cfg: ExperimentConfig) -> dict:
    return write_outputs(cfg, run_experiment(cfg))
