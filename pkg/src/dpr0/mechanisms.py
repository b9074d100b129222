"""Noise calibration and the two privacy mechanisms.

Input perturbation replaces each positive weight by a truncated Gaussian draw
centred on it. Output perturbation adds truncated Laplace noise to R0 itself.
Both scales are the smallest values satisfying their privacy inequalities,
found by bracketed root finding.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import erf

from .errors import ArgumentError, ConvergenceError, InfeasibleBudgetError
from .graph import WeightBounds, WeightedGraph
from .numerics import (
    INV_SQRT_2PI,
    TruncLaplaceParams,
    normal_mass,
    sample_trunc_gauss_array,
    sample_trunc_laplace,
)
from .spectral import spectral_radius

MODES = ("tangent", "uniform", "conservative")
DEFAULT_MODE = "tangent"
MAX_ITER = 1000


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    k: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ArgumentError("epsilon must be a positive finite number")
        if not (math.isfinite(self.k) and self.k > 0):
            raise ArgumentError("k must be a positive finite number")


def privatized_mask(pattern, directed: bool = False) -> np.ndarray:
    """Entries that receive their own noise draw: all positive entries when
    directed, otherwise the positive entries on or above the diagonal."""
    pattern = np.asarray(pattern, dtype=bool)
    return pattern.copy() if directed else np.triu(pattern)


# -- root finding --------------------------------------------------------------


def _solve_scale(const: float, epsilon: float, log_dc, power: int):
    """Smallest x > 0 with x**power * (epsilon - log_dc(x)) >= const.

    ``log_dc`` is nonincreasing in x, so x - (const / (epsilon - log_dc(x)))**(1/power)
    is increasing and the feasible set is a half-line; its endpoint is bracketed
    by doubling and refined with Brent's method.
    Returns (x, log_dc(x), iterations).
    """

    def f(x):
        return x**power * (epsilon - log_dc(x)) - const

    lo = (const / epsilon) ** (1.0 / power)  # log_dc >= 0, so no feasible x lies below
    if f(lo) >= 0:
        return lo, log_dc(lo), 0
    hi = lo
    for _ in range(200):
        hi *= 2.0
        if f(hi) > 0:
            break
        lo = hi
    else:
        raise InfeasibleBudgetError(
            f"epsilon={epsilon!r} cannot cover the truncation penalty at any noise scale"
        )
    try:
        x, info = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                                  maxiter=MAX_ITER, full_output=True)
    except RuntimeError as exc:
        raise ConvergenceError(str(exc), iterations=MAX_ITER) from None
    # step onto the feasible side of the root
    for _ in range(64):
        if f(x) >= 0:
            break
        x = math.nextafter(x, math.inf)
    return x, log_dc(x), info.iterations


# -- Gaussian input mechanism -------------------------------------------------


def log_normalizer_ratio(c, width, sigma):
    """Per-entry log of the worst normalizer ratio for a centre shift ``c``.

    For a window of width W the Gaussian mass is smallest with the centre at an
    end of the window; moving it inward by c multiplies the mass by
    [Phi((W-c)/s) - Phi(-c/s)] / [Phi(W/s) - Phi(0)].
    """
    c = np.asarray(c, float)
    width = np.asarray(width, float)
    num = normal_mass(-c / sigma, (width - c) / sigma)
    den = normal_mass(np.zeros_like(width), width / sigma)
    return np.log(num) - np.log(den)


def tangent_slopes(width, sigma):
    """Derivative at c = 0 of ``log_normalizer_ratio``; the log ratio is concave in c,
    so ``slope * c`` bounds it from above."""
    x = np.asarray(width, float) / sigma
    num = -INV_SQRT_2PI * np.expm1(-0.5 * x * x)  # phi(0) - phi(x)
    den = sigma * 0.5 * erf(x / math.sqrt(2.0))  # sigma * (Phi(x) - 1/2)
    return num / den


def _log_delta_c(widths, sigma, k, mode):
    """(log Delta C, allocation vector) for the privatized entries."""
    m = widths.size
    if m == 0:
        return 0.0, np.zeros(0)
    if mode == "tangent":
        a = tangent_slopes(widths, sigma)
        na = float(np.linalg.norm(a))
        return k * na, k * a / na
    if mode == "uniform":
        c = np.full(m, k / math.sqrt(m))
    elif mode == "conservative":
        c = np.full(m, float(k))
    else:
        raise ArgumentError(f"unknown calibration mode {mode!r}; choose from {MODES}")
    # the ratio peaks once the centre reaches mid-window
    c = np.minimum(c, widths / 2.0)
    return float(np.sum(log_normalizer_ratio(c, widths, sigma))), c


@dataclass(frozen=True, eq=False)
class GaussianCalibration:
    sigma: float
    epsilon: float
    k: float
    mode: str
    log_delta_c: float
    s_term: float
    c: np.ndarray
    mask: np.ndarray
    directed: bool
    iterations: int

    @property
    def delta_c(self) -> float:
        # tiny sigma can push Delta C past the float range; log_delta_c stays exact
        return math.exp(self.log_delta_c) if self.log_delta_c < 709.0 else math.inf

    @property
    def n_privatized(self) -> int:
        return int(np.count_nonzero(self.mask))

    def slack(self) -> float:
        """sigma^2 (epsilon - log Delta C) - k (k/2 + S); nonnegative when private."""
        return self.sigma**2 * (self.epsilon - self.log_delta_c) - self.k * (self.k / 2 + self.s_term)

    def to_dict(self) -> dict:
        return {
            "mechanism": "input",
            "sigma": self.sigma,
            "epsilon": self.epsilon,
            "k": self.k,
            "mode": self.mode,
            "delta_c": self.delta_c if math.isfinite(self.delta_c) else None,
            "log_delta_c": self.log_delta_c,
            "s_term": self.s_term,
            "n_privatized": self.n_privatized,
            "directed": self.directed,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def calibrate_gaussian(bounds: WeightBounds, pattern, budget: PrivacyBudget,
                       mode: str = DEFAULT_MODE, directed: bool = False) -> GaussianCalibration:
    """Smallest sigma with sigma^2 >= k (k/2 + S) / (epsilon - log Delta C(sigma)).

    S is the Euclidean norm of the window widths over the privatized entries.
    ``mode`` picks how Delta C is bounded:

    * ``tangent`` (default): log Delta C <= k ||a||, a the per-entry slopes of the
      log normalizer ratio at zero shift. Valid for every allocation by concavity
      and Cauchy-Schwarz.
    * ``uniform``: every entry shifted by k / sqrt(m).
    * ``conservative``: every entry shifted by min(k, W/2), the worst case per entry.
    """
    if mode not in MODES:
        raise ArgumentError(f"unknown calibration mode {mode!r}; choose from {MODES}")
    mask = privatized_mask(pattern, directed)
    if mask.shape != bounds.lower.shape:
        raise ArgumentError("pattern shape does not match bounds")
    if not mask.any():
        raise ArgumentError("no positive weights to privatize")
    widths = bounds.width[mask]
    if np.any(widths <= 0):
        raise ArgumentError("empty bound interval on a privatized entry")
    k = budget.k
    s_term = float(np.linalg.norm(widths))
    const = k * (k / 2.0 + s_term)

    def log_dc(sigma):
        return _log_delta_c(widths, sigma, k, mode)[0]

    sigma, ldc, iters = _solve_scale(const, budget.epsilon, log_dc, power=2)
    c = np.zeros(mask.shape)
    c[mask] = _log_delta_c(widths, sigma, k, mode)[1]
    return GaussianCalibration(sigma, budget.epsilon, k, mode, ldc, s_term, c, mask, directed, iters)


def _solve_sigma(const: float, epsilon: float, log_dc=lambda s: 0.0):
    """Root-finder hook, exposed for closed-form checks."""
    return _solve_scale(const, epsilon, log_dc, power=2)[0]


def input_perturb(graph: WeightedGraph, bounds: WeightBounds, calib: GaussianCalibration,
                  rng: np.random.Generator, directed: bool | None = None) -> WeightedGraph:
    """Privatized copy of ``graph``: truncated Gaussian noise on positive weights.

    Zero weights stay zero. In the symmetric case the upper triangle is drawn
    (row-major order) and mirrored.
    """
    if directed is None:
        directed = not graph.symmetric
    if directed != calib.directed:
        raise ArgumentError("calibration and perturbation disagree on directedness")
    mask = privatized_mask(graph.pattern, directed)
    if mask.shape != calib.mask.shape or not np.array_equal(mask, calib.mask):
        raise ArgumentError("calibration does not match the graph's positivity pattern")
    bounds.check(graph)
    w = graph.weights
    out = np.array(w, copy=True)
    if mask.any():
        draws = sample_trunc_gauss_array(w[mask], calib.sigma, bounds.lower[mask], bounds.upper[mask], rng)
        out[mask] = draws
        if not directed:
            lower_tri = np.tril(np.ones_like(mask), -1)
            out = np.where(lower_tri, out.T, out)
    return WeightedGraph(out, symmetric=not directed and graph.symmetric)


# -- Laplace output mechanism -------------------------------------------------


def laplace_normalizer(r0: float, b: float, r0_cap: float) -> float:
    """C_R(b): Laplace(R0, b) mass inside (0, R0_cap]."""
    if not b > 0:
        raise ArgumentError("b must be positive")
    if not 0 < r0 <= r0_cap:
        raise ArgumentError(f"R0={r0!r} outside (0, {r0_cap!r}]")
    # 1 - (e^-x + e^-y)/2 written with expm1 to keep precision when b is large
    return -0.5 * (math.expm1(-r0 / b) + math.expm1(-(r0_cap - r0) / b))


def laplace_delta_c(b: float, k: float, r0_cap: float) -> float:
    """Largest normalizer ratio C_{R+k}(b) / C_R(b) over the domain.

    The smallest normalizer sits at the domain edge. Shifting inward by k raises
    it, but only until the midpoint, so k is capped at R0_cap / 2.
    """
    if not b > 0:
        raise ArgumentError("b must be positive")
    if not 0 < k < r0_cap:
        raise ArgumentError(f"k={k!r} must lie in (0, R0_cap={r0_cap!r})")
    shift = min(k, r0_cap / 2.0)
    num = -0.5 * (math.expm1(-shift / b) + math.expm1(-(r0_cap - shift) / b))
    den = -0.5 * math.expm1(-r0_cap / b)
    return num / den


@dataclass(frozen=True)
class LaplaceCalibration:
    b: float
    epsilon: float
    delta_r: float
    r0_cap: float
    delta_c_b: float
    iterations: int

    def slack(self) -> float:
        """b (epsilon - log Delta C(b)) - Delta R; nonnegative when private."""
        return self.b * (self.epsilon - math.log(self.delta_c_b)) - self.delta_r

    def to_dict(self) -> dict:
        return {
            "mechanism": "output",
            "b": self.b,
            "epsilon": self.epsilon,
            "k": self.delta_r,
            "delta_r": self.delta_r,
            "r0_cap": self.r0_cap,
            "delta_c": self.delta_c_b,
            "iterations": self.iterations,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def calibrate_laplace(budget: PrivacyBudget, r0_cap: float) -> LaplaceCalibration:
    """Smallest b with b >= k / (epsilon - log Delta C(b)).

    The sensitivity of rho under weight adjacency is at most k, so Delta R = k.
    """
    k = budget.k
    if not (math.isfinite(r0_cap) and r0_cap > k):
        raise ArgumentError(f"R0 cap {r0_cap!r} must exceed k={k!r}")

    def log_dc(b):
        return math.log(laplace_delta_c(b, k, r0_cap))

    b, ldc, iters = _solve_scale(k, budget.epsilon, log_dc, power=1)
    return LaplaceCalibration(b, budget.epsilon, k, float(r0_cap), math.exp(ldc), iters)


def output_perturb(r0: float, calib: LaplaceCalibration, rng: np.random.Generator, size=None):
    """Draw(s) from TrunL(R0, b, 0, R0_cap)."""
    if not 0 < r0 <= calib.r0_cap:
        raise ArgumentError(f"R0={r0!r} outside (0, {calib.r0_cap!r}]")
    return sample_trunc_laplace(TruncLaplaceParams(r0, calib.b, 0.0, calib.r0_cap), rng, size)


def r0_cap_from_bounds(bounds: WeightBounds, pattern=None) -> float:
    """rho of the upper-bound matrix, restricted to ``pattern`` when given.

    Entrywise W <= W_upper for nonnegative matrices implies rho(W) <= rho(W_upper).
    """
    up = np.array(bounds.upper, copy=True)
    if pattern is not None:
        up = np.where(np.asarray(pattern, bool), up, 0.0)
    return spectral_radius(up).value
