"""Analytic accuracy bounds for both mechanisms.

Input perturbation: expectation/variance bounds built from the truncation
correction xi_e, the penetration (1/R0) confidence pair built from xi_p, the
tail bound with C = 2 * 9^(2n), and the directed variant with the non-normality
gap kappa = ||W||_2 - rho(W). Output perturbation: exact error moments and
interval masses of the truncated Laplace release.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ArgumentError, NumericDomainError
from .graph import WeightBounds, WeightedGraph
from .mechanisms import laplace_normalizer
from .numerics import INV_SQRT_2PI, lower_incomplete_gamma, normal_mass
from .spectral import operator_norm, spectral_radius

LOG_TAIL_BASE = math.log(9.0)
PENETRATION_DIM_CONST = 4.4


def _entry_terms(graph: WeightedGraph, bounds: WeightBounds, sigma: float):
    """alpha, beta, mass and the boolean mask over the positive entries."""
    if not sigma > 0:
        raise ArgumentError("sigma must be positive")
    bounds.check(graph)
    mask = graph.pattern
    w = graph.weights[mask]
    alpha = (bounds.lower[mask] - w) / sigma
    beta = (bounds.upper[mask] - w) / sigma
    mass = np.asarray(normal_mass(alpha, beta))
    if np.any(mass <= 0) or not np.all(np.isfinite(mass)):
        raise NumericDomainError("truncation window carries no Gaussian mass at this sigma")
    return alpha, beta, mass, mask


def _spread_terms(alpha, beta, mass):
    pa = INV_SQRT_2PI * np.exp(-0.5 * alpha**2)
    pb = INV_SQRT_2PI * np.exp(-0.5 * beta**2)
    return (beta * pb - alpha * pa) / mass


def xi_e(graph: WeightedGraph, bounds: WeightBounds, sigma: float, directed: bool | None = None) -> float:
    """Truncation correction to the n_w * sigma^2 variance budget.

    Symmetric graphs count each off-diagonal pair twice and each diagonal entry
    once; directed graphs sum every positive entry once.
    """
    if directed is None:
        directed = not graph.symmetric
    if graph.n_w == 0:
        return 0.0
    alpha, beta, mass, mask = _entry_terms(graph, bounds, sigma)
    t = _spread_terms(alpha, beta, mass)
    if directed:
        return float(np.sum(t))
    i, j = np.nonzero(mask)
    upper = i <= j
    weight = np.where(i[upper] == j[upper], 1.0, 2.0)
    return float(np.sum(weight * t[upper]))


def input_error_bounds(graph: WeightedGraph, bounds: WeightBounds, sigma: float) -> tuple[float, float]:
    """(bound on E|R0~ - R0|, bound on Var|R0~ - R0|) = (sigma sqrt(n_w - xi_e), sigma^2 (n_w - xi_e))."""
    eff = graph.n_w - xi_e(graph, bounds, sigma)
    eff = max(eff, 0.0)
    return sigma * math.sqrt(eff), sigma**2 * eff


def xi_p(graph: WeightedGraph, bounds: WeightBounds, sigma: float) -> float:
    """Frobenius norm of the mean-shift matrix E[W~] - W."""
    if graph.n_w == 0:
        return 0.0
    alpha, beta, mass, _ = _entry_terms(graph, bounds, sigma)
    pa = INV_SQRT_2PI * np.exp(-0.5 * alpha**2)
    pb = INV_SQRT_2PI * np.exp(-0.5 * beta**2)
    return float(np.linalg.norm(sigma * (pa - pb) / mass))


@dataclass(frozen=True)
class PenetrationBound:
    threshold: float
    confidence: float
    vacuous: bool
    t: float
    u1: float
    u2: float
    v2: float
    xi_p: float


def penetration_confidence(n: int, sigma: float, t: float) -> tuple[float, float, bool]:
    """(confidence, v^2, vacuous) with v^2 = t^2/(2 sigma^2) - 4.4 n."""
    v2 = t * t / (2.0 * sigma * sigma) - PENETRATION_DIM_CONST * n
    if v2 <= 0:
        return 0.0, v2, True
    conf = -4.0 * math.expm1(-v2) - 3.0  # 1 - 4 e^{-v^2}
    if conf <= 0:
        return 0.0, v2, True
    return min(conf, math.nextafter(1.0, 0.0)), v2, False


def t_for_confidence(n: int, sigma: float, confidence: float) -> float:
    """Smallest t whose penetration confidence reaches ``confidence``."""
    if not 0 < confidence < 1:
        raise ArgumentError("confidence must lie in (0, 1)")
    v2 = math.log(4.0 / (1.0 - confidence))
    return sigma * math.sqrt(2.0 * (v2 + PENETRATION_DIM_CONST * n))


def penetration_bound_eval(graph: WeightedGraph, bounds: WeightBounds, sigma: float, t: float,
                           r0: float | None = None) -> PenetrationBound:
    """P(|1/R0~ - 1/R0| < threshold) >= confidence for 0 < t < R0 - xi_p."""
    if r0 is None:
        r0 = spectral_radius(graph.weights).value
    xp = xi_p(graph, bounds, sigma)
    if not 0 < t < r0 - xp:
        raise ArgumentError(f"t={t!r} must lie in (0, R0 - xi_p) = (0, {r0 - xp!r})")
    a = t + xp
    u1 = 1.0 / r0 - 1.0 / (r0 + a)
    u2 = 1.0 / (r0 - a) - 1.0 / r0
    conf, v2, vacuous = penetration_confidence(graph.n, sigma, t)
    return PenetrationBound(max(u1, u2), conf, vacuous, t, u1, u2, v2, xp)


def log_tail_constant(n: int) -> float:
    """log C with C = 2 * 9^(2n)."""
    return math.log(2.0) + 2.0 * n * LOG_TAIL_BASE


def input_tail_bound(n: int, n_w: int, sigma: float, t: float) -> float:
    """Bound on P[r > t] in R0~ - R0 <= sigma sqrt(n_w) + r, computed in log space."""
    if not sigma > 0:
        raise ArgumentError("sigma must be positive")
    if t < 0:
        raise ArgumentError("t must be nonnegative")
    log_p = log_tail_constant(n) - t * t / (2.0 * sigma * sigma)
    return 1.0 if log_p >= 0 else math.exp(log_p)


def _check_output_domain(r0, b, r0_cap):
    if not b > 0:
        raise ArgumentError("b must be positive")
    if not 0 < r0 <= r0_cap:
        raise ArgumentError(f"R0={r0!r} outside (0, {r0_cap!r}]")


def output_error_moments(r0: float, b: float, r0_cap: float) -> tuple[float, float]:
    """Exact (E|R0~ - R0|, E(R0~ - R0)^2) for R0~ ~ TrunL(R0, b, 0, R0_cap)."""
    _check_output_domain(r0, b, r0_cap)
    c = laplace_normalizer(r0, b, r0_cap)
    lo = -r0 / b
    up = -(r0_cap - r0) / b
    mae = b * (2.0 + (lo - 1.0) * math.exp(lo) + (up - 1.0) * math.exp(up)) / (2.0 * c)
    mse = b * b * (lower_incomplete_gamma(3, -lo) + lower_incomplete_gamma(3, -up)) / (2.0 * c)
    return mae, mse


def _untrunc_cdf(x, r0, b):
    z = (x - r0) / b
    return 0.5 * math.exp(z) if z < 0 else 1.0 - 0.5 * math.exp(-z)


def output_interval_mass(r0: float, b: float, r0_cap: float, lq: float, uq: float) -> float:
    """P[lq < R0~ <= uq] under the truncated Laplace release."""
    _check_output_domain(r0, b, r0_cap)
    if not 0 <= lq < uq <= r0_cap:
        raise ArgumentError(f"interval ({lq!r}, {uq!r}] must lie inside (0, {r0_cap!r}]")
    c = laplace_normalizer(r0, b, r0_cap)
    if lq <= r0 <= uq:
        mass = -0.5 * (math.expm1(-(r0 - lq) / b) + math.expm1(-(uq - r0) / b))
    elif uq < r0:
        mass = 0.5 * (math.exp((uq - r0) / b) - math.exp((lq - r0) / b))
    else:
        mass = 0.5 * (math.exp(-(lq - r0) / b) - math.exp(-(uq - r0) / b))
    return min(1.0, mass / c)


def directed_error_bounds(graph: WeightedGraph, bounds: WeightBounds, sigma: float) -> tuple[float, float, float]:
    """(mean bound, MSE bound, kappa) for noise on every positive entry of a directed W."""
    xe = xi_e(graph, bounds, sigma, directed=True)
    big_xi = math.sqrt(max(graph.n_w - xe, 0.0))
    kappa = max(operator_norm(graph.weights).value - spectral_radius(graph.weights).value, 0.0)
    mean = sigma * big_xi + kappa
    return mean, mean * mean, kappa


# -- report ---------------------------------------------------------------------

CSV_COLUMNS = (
    "sigma", "n", "n_w", "xi_e", "mean_bound", "var_bound", "xi_p", "log_tail_c",
    "kappa", "t", "threshold", "confidence", "vacuous",
)


@dataclass
class AccuracyReport:
    """Bounds for one calibrated input-perturbation release."""

    sigma: float
    n: int
    n_w: int
    xi_e: float
    mean_bound: float
    var_bound: float
    xi_p: float
    log_tail_c: float
    kappa: float = 0.0
    t: float | None = None
    threshold: float | None = None
    confidence: float | None = None
    vacuous: bool | None = None

    @property
    def outer_mean_bound(self) -> float:
        return self.sigma * math.sqrt(self.n_w) + self.kappa

    @property
    def outer_var_bound(self) -> float:
        return self.sigma**2 * self.n_w

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> str:
        buf = io.StringIO()
        row = ["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in (getattr(self, c) for c in CSV_COLUMNS)]
        csv.writer(buf, lineterminator="\n").writerow(row)
        return buf.getvalue()


def accuracy_report(graph: WeightedGraph, bounds: WeightBounds, sigma: float, confidence: float | None = None,
                    t: float | None = None, r0: float | None = None) -> AccuracyReport:
    """Collect every input-perturbation bound. The penetration pair is filled in
    when ``t`` is given or can be derived from ``confidence`` inside its range."""
    directed = not graph.symmetric
    if directed:
        mean_b, mse_b, kappa = directed_error_bounds(graph, bounds, sigma)
        xe = xi_e(graph, bounds, sigma, directed=True)
        var_b = mse_b
    else:
        xe = xi_e(graph, bounds, sigma)
        mean_b, var_b = input_error_bounds(graph, bounds, sigma)
        kappa = 0.0
    rep = AccuracyReport(sigma, graph.n, graph.n_w, xe, mean_b, var_b, xi_p(graph, bounds, sigma),
                         log_tail_constant(graph.n), kappa)
    if t is None and confidence is not None:
        t = t_for_confidence(graph.n, sigma, confidence)
    if t is not None and not directed:
        if r0 is None:
            r0 = spectral_radius(graph.weights).value
        if 0 < t < r0 - rep.xi_p:
            pb = penetration_bound_eval(graph, bounds, sigma, t, r0)
            rep.t, rep.threshold, rep.confidence, rep.vacuous = t, pb.threshold, pb.confidence, pb.vacuous
        else:
            rep.t, rep.threshold, rep.confidence, rep.vacuous = t, None, 0.0, True
    return rep
