"""Spectral radius, operator 2-norm and Frobenius norm of weight matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, ConvergenceError

TOL = 1e-10
MAX_ITER = 100_000


@dataclass(frozen=True)
class SpectralResult:
    value: float
    iterations: int
    residual: float

    def __float__(self):
        return self.value


def _as_matrix(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ArgumentError("expected a square matrix")
    if not np.all(np.isfinite(w)):
        raise ArgumentError("matrix entries must be finite")
    return w


def _top_eig_psd(m: np.ndarray, v: np.ndarray, scale: float, tol: float, max_iter: int):
    """Largest eigenpair of a symmetric matrix with nonnegative spectrum.

    Returns (value, vector, iterations, residual). The residual is
    ||m v - lambda v||_inf for the unit-norm iterate.
    """
    v = v / np.linalg.norm(v)
    thresh = tol * max(1.0, scale)
    res = np.inf
    for it in range(1, max_iter + 1):
        mv = m @ v
        lam = float(v @ mv)
        res = float(np.max(np.abs(mv - lam * v)))
        if res <= thresh:
            return lam, v, it, res
        norm = np.linalg.norm(mv)
        if norm == 0.0:
            # v spans the null space; the spectrum is {0} on the reachable subspace
            return 0.0, v, it, 0.0
        v = mv / norm
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (residual {res:.3g})",
        residual=res,
        iterations=max_iter,
    )


def _sym_lambda_max(w: np.ndarray, tol: float, max_iter: int):
    n = w.shape[0]
    mu = float(np.max(np.sum(np.abs(w), axis=1)))  # ||W||_inf bounds every |eigenvalue|
    if mu == 0.0:
        return 0.0, 1, 0.0
    lam, _, it, res = _top_eig_psd(w + mu * np.eye(n), np.ones(n), mu, tol, max_iter)
    return lam - mu, it, res


def spectral_radius(w, tol: float = TOL, max_iter: int = MAX_ITER) -> SpectralResult:
    """rho(W) = max |lambda_i(W)|.

    Symmetric input uses power iteration on ``W + mu I`` with ``mu = ||W||_inf``
    (every shifted eigenvalue is then nonnegative, so the largest one dominates)
    from the all-ones start vector. Symmetric matrices with negative entries use
    ``rho(W) = sqrt(lambda_max(W^2))`` instead, which covers negative eigenvalues
    and converges at the squared eigenvalue ratio. Nonsymmetric
    input is handled by a dense eigenvalue solve, since power iteration stalls on
    periodic and nilpotent directed matrices.
    """
    w = _as_matrix(w)
    if np.array_equal(w, w.T):
        if np.any(w < 0):
            return operator_norm(w, tol, max_iter)
        lam, it, res = _sym_lambda_max(w, tol, max_iter)
        return SpectralResult(max(lam, 0.0), it, res)
    vals, vecs = np.linalg.eig(w)
    i = int(np.argmax(np.abs(vals)))
    v = vecs[:, i]
    res = float(np.max(np.abs(w @ v - vals[i] * v)))
    return SpectralResult(float(np.abs(vals[i])), 0, res)


def operator_norm(w, tol: float = TOL, max_iter: int = MAX_ITER) -> SpectralResult:
    """||W||_2 = sqrt(lambda_max(W^T W)) by power iteration on the Gram matrix."""
    w = _as_matrix(w)
    n = w.shape[0]
    g = w.T @ w
    scale = float(np.max(np.sum(np.abs(g), axis=1)))
    if scale == 0.0:
        return SpectralResult(0.0, 1, 0.0)
    # a fixed generic start avoids being orthogonal to the top singular vector
    start = 1.0 + np.random.default_rng(0x5EED).random(n)
    lam, _, it, res = _top_eig_psd(g, start, scale, tol, max_iter)
    return SpectralResult(float(np.sqrt(max(lam, 0.0))), it, res)


def frobenius_norm(w) -> float:
    return float(np.linalg.norm(_as_matrix(w), "fro"))
