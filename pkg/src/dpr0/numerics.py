"""Special functions, truncated Gaussian / Laplace distributions and seeded RNG streams.

The normal CDF, its quantile and the regularized incomplete gamma come from
``scipy.special`` (erfc-based, relative accuracy near machine precision). The
truncated-distribution algebra on top of them is written out here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ArgumentError, NumericDomainError

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI

# Below this window mass the inverse-CDF sampler hands over to tail rejection.
TAIL_MASS = 1e-12


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ArgumentError("argument must be finite")


def std_normal_pdf(x):
    _check_finite(x)
    x = np.asarray(x, dtype=float)
    out = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if out.ndim == 0 else out


def std_normal_cdf(x):
    _check_finite(x)
    out = special.ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def _phi(x):
    return INV_SQRT_2PI * np.exp(-0.5 * np.square(x))


def normal_mass(alpha, beta):
    """Phi(beta) - Phi(alpha), evaluated on the tail that avoids cancellation."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    upper = alpha > 0
    out = np.where(
        upper,
        special.ndtr(-alpha) - special.ndtr(-beta),
        special.ndtr(beta) - special.ndtr(alpha),
    )
    return float(out) if out.ndim == 0 else out


def log_normal_mass(alpha, beta):
    """log(Phi(beta) - Phi(alpha)) for scalar alpha < beta."""
    if alpha > 0:
        alpha, beta = -beta, -alpha
    lb = special.log_ndtr(beta)
    la = special.log_ndtr(alpha)
    diff = la - lb
    if diff >= 0:
        return -math.inf
    return float(lb + math.log1p(-math.exp(diff)))


@dataclass(frozen=True)
class TruncGaussParams:
    """Normal(mu, sigma^2) conditioned on the half-open window (lower, upper]."""

    mu: float
    sigma: float
    lower: float
    upper: float

    def __post_init__(self):
        for name in ("mu", "sigma", "lower", "upper"):
            if not math.isfinite(getattr(self, name)):
                raise ArgumentError(f"{name} must be finite")
        if self.sigma <= 0:
            raise ArgumentError("sigma must be positive")
        if not self.lower < self.upper:
            raise ArgumentError("lower must be < upper")

    @property
    def alpha(self) -> float:
        return (self.lower - self.mu) / self.sigma

    @property
    def beta(self) -> float:
        return (self.upper - self.mu) / self.sigma

    @property
    def mass(self) -> float:
        return normal_mass(self.alpha, self.beta)


@dataclass(frozen=True)
class TruncLaplaceParams:
    """Laplace(mu, b) conditioned on (lower, upper]."""

    mu: float
    b: float
    lower: float
    upper: float

    def __post_init__(self):
        for name in ("mu", "b", "lower", "upper"):
            if not math.isfinite(getattr(self, name)):
                raise ArgumentError(f"{name} must be finite")
        if self.b <= 0:
            raise ArgumentError("b must be positive")
        if not self.lower < self.upper:
            raise ArgumentError("lower must be < upper")


# -- truncated Gaussian ------------------------------------------------------


def _moment_ratios(alpha, beta):
    mass = normal_mass(alpha, beta)
    if np.any(np.asarray(mass) <= 0) or not np.all(np.isfinite(mass)):
        raise NumericDomainError("truncation window carries no Gaussian mass")
    pa, pb = _phi(alpha), _phi(beta)
    shift = (pa - pb) / mass
    # beta*phi(beta) is 0 in the limit beta -> inf; guard inf*0
    bpb = np.where(np.isfinite(beta), beta * pb, 0.0)
    apa = np.where(np.isfinite(alpha), alpha * pa, 0.0)
    spread = (bpb - apa) / mass
    return shift, spread


def trunc_gauss_moments(p: TruncGaussParams) -> tuple[float, float]:
    """Mean and variance of ``TrunG(mu, sigma, lower, upper)``."""
    shift, spread = _moment_ratios(p.alpha, p.beta)
    mean = p.mu + p.sigma * float(shift)
    var = p.sigma**2 * (1.0 - float(spread) - float(shift) ** 2)
    return mean, max(var, 0.0)


def trunc_gauss_pdf(x, p: TruncGaussParams):
    x = np.asarray(x, dtype=float)
    inside = (x > p.lower) & (x <= p.upper)
    dens = _phi((x - p.mu) / p.sigma) / (p.sigma * p.mass)
    out = np.where(inside, dens, 0.0)
    return float(out) if out.ndim == 0 else out


def trunc_gauss_log_mgf(p: TruncGaussParams, eta: float, centered: bool = False) -> float:
    if not math.isfinite(eta):
        raise ArgumentError("eta must be finite")
    a, b, s = p.alpha, p.beta, p.sigma
    log_num = log_normal_mass(a - s * eta, b - s * eta)
    log_den = log_normal_mass(a, b)
    if not math.isfinite(log_den) or not math.isfinite(log_num):
        raise NumericDomainError("moment generating function underflows")
    out = p.mu * eta + 0.5 * s * s * eta * eta + log_num - log_den
    if centered:
        out -= eta * trunc_gauss_moments(p)[0]
    return out


def trunc_gauss_mgf(p: TruncGaussParams, eta: float, centered: bool = False) -> float:
    """E[exp(eta*Y)], or E[exp(eta*(Y - E[Y]))] when ``centered``."""
    log_val = trunc_gauss_log_mgf(p, eta, centered)
    if log_val > 709.0:
        raise NumericDomainError("moment generating function overflows")
    return math.exp(log_val)


def _tail_sample(a: float, b: float, rng: np.random.Generator) -> float:
    """Standard normal restricted to [a, b] with 0 <= a < b (rejection)."""
    width = b - a
    if width < 1.0 / max(a, 1.0):
        # narrow window: uniform proposal, density ratio bounded by exp(-(x^2-a^2)/2)
        while True:
            z = a + width * rng.random()
            if rng.random() <= math.exp(-0.5 * (z * z - a * a)):
                return z
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        z = a - math.log1p(-rng.random()) / lam
        if z > b:
            continue
        if rng.random() <= math.exp(-0.5 * (z - lam) ** 2):
            return z


def sample_trunc_gauss_array(mu, sigma, lower, upper, rng: np.random.Generator) -> np.ndarray:
    """Vectorised inverse-CDF draws; entries are consumed in C order."""
    mu, sigma, lower, upper = np.broadcast_arrays(
        np.asarray(mu, float), np.asarray(sigma, float), np.asarray(lower, float), np.asarray(upper, float)
    )
    shape = mu.shape
    mu, sigma, lower, upper = (v.ravel() for v in (mu, sigma, lower, upper))
    if np.any(sigma <= 0) or np.any(lower >= upper):
        raise ArgumentError("invalid truncated Gaussian parameters")
    alpha = (lower - mu) / sigma
    beta = (upper - mu) / sigma
    # reflect windows lying wholly above the mean into the lower half
    flip = alpha > 0
    a = np.where(flip, -beta, alpha)
    b = np.where(flip, -alpha, beta)
    u = 1.0 - rng.random(mu.size)  # (0, 1]
    ca = special.ndtr(a)
    mass = special.ndtr(b) - ca
    z = special.ndtri(ca + u * mass)
    # u = 1 maps to b; flipping turns the closed end into the lower limit, so
    # sample the reflected variable on [a, b) instead
    z = np.where(flip, special.ndtri(ca + (1.0 - u) * mass), z)
    z = np.clip(z, a, b)
    for i in np.flatnonzero((mass < TAIL_MASS) & (b < 0)):
        z[i] = -_tail_sample(-b[i], -a[i], rng)
    z = np.where(flip, -z, z)
    x = mu + sigma * z
    x = np.minimum(np.maximum(x, np.nextafter(lower, np.inf)), upper)
    return x.reshape(shape)


def sample_trunc_gauss(p: TruncGaussParams, rng: np.random.Generator, size=None):
    if size is None:
        return float(sample_trunc_gauss_array(p.mu, p.sigma, p.lower, p.upper, rng))
    shape = (size,) if isinstance(size, int) else tuple(size)
    return sample_trunc_gauss_array(
        np.full(shape, p.mu), p.sigma, p.lower, p.upper, rng
    )


# -- truncated Laplace -------------------------------------------------------


def _laplace_cdf(x, mu, b):
    z = (np.asarray(x, float) - mu) / b
    return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))


def _laplace_sf(x, mu, b):
    z = (np.asarray(x, float) - mu) / b
    return np.where(z < 0, 1.0 - 0.5 * np.exp(np.minimum(z, 0.0)), 0.5 * np.exp(-np.maximum(z, 0.0)))


def trunc_laplace_pdf(x, p: TruncLaplaceParams):
    x = np.asarray(x, dtype=float)
    norm = float(_laplace_cdf(p.upper, p.mu, p.b) - _laplace_cdf(p.lower, p.mu, p.b))
    dens = np.exp(-np.abs(x - p.mu) / p.b) / (2.0 * p.b * norm)
    out = np.where((x > p.lower) & (x <= p.upper), dens, 0.0)
    return float(out) if out.ndim == 0 else out


def trunc_laplace_cdf(x, p: TruncLaplaceParams):
    x = np.clip(np.asarray(x, dtype=float), p.lower, p.upper)
    fl = _laplace_cdf(p.lower, p.mu, p.b)
    norm = _laplace_cdf(p.upper, p.mu, p.b) - fl
    out = (_laplace_cdf(x, p.mu, p.b) - fl) / norm
    return float(out) if out.ndim == 0 else out


def sample_trunc_laplace(p: TruncLaplaceParams, rng: np.random.Generator, size=None):
    """Inverse-CDF draws from ``TrunL(mu, b, lower, upper)``; location must lie in the window."""
    if not p.lower < p.mu <= p.upper:
        raise ArgumentError("location must lie in (lower, upper]")
    n = 1 if size is None else size
    v = 1.0 - rng.random(n)  # (0, 1]
    fl = float(_laplace_cdf(p.lower, p.mu, p.b))
    fu = float(_laplace_cdf(p.upper, p.mu, p.b))
    sl = float(_laplace_sf(p.lower, p.mu, p.b))
    su = float(_laplace_sf(p.upper, p.mu, p.b))
    cdf = fl + v * (fu - fl)
    sf = sl - v * (sl - su)
    with np.errstate(divide="ignore"):
        x = np.where(cdf < 0.5, p.mu + p.b * np.log(2.0 * cdf), p.mu - p.b * np.log(2.0 * sf))
    x = np.minimum(np.maximum(x, np.nextafter(p.lower, np.inf)), p.upper)
    return float(x[0]) if size is None else x


# -- incomplete gamma --------------------------------------------------------


def lower_incomplete_gamma(s: float, x: float) -> float:
    """Unregularized lower incomplete gamma, integral of t^(s-1) e^-t over [0, x]."""
    if s <= 0:
        raise ArgumentError("s must be positive")
    if x < 0:
        raise ArgumentError("x must be nonnegative")
    return float(special.gammainc(s, x) * special.gamma(s))


# -- random streams ----------------------------------------------------------


def seeded_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, *stream)``.

    Streams are derived with ``SeedSequence`` spawn keys, so per-trial generators
    ``seeded_rng(base, graph_id, trial_id)`` are reproducible and independent of
    the order in which trials run.
    """
    seq = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(seq))
