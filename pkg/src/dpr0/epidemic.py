"""Networked SIS / SIR dynamics and the level-of-penetration check s*_i <= 1/R0."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, InstabilityError, PreconditionError, ValidationError

EQUILIBRIUM_TOL = 1e-8
PENETRATION_TOL = 1e-3
ESCAPE_TOL = 1e-6
KINDS = ("SIS", "SIR")


@dataclass(frozen=True, eq=False)
class EpidemicSystem:
    """Transmission matrix B (rates), recovery rates gamma and model kind."""

    B: np.ndarray
    gamma: np.ndarray
    kind: str = "SIR"

    def __post_init__(self):
        b = np.array(self.B, dtype=float)
        g = np.array(self.gamma, dtype=float).reshape(-1)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValidationError("B must be square")
        if g.size == 1 and b.shape[0] > 1:
            g = np.full(b.shape[0], g[0])
        if g.shape != (b.shape[0],):
            raise ValidationError("gamma must have one rate per node")
        if not (np.all(np.isfinite(b)) and np.all(b >= 0)):
            raise ValidationError("B must be finite and nonnegative")
        if not (np.all(np.isfinite(g)) and np.all(g > 0)):
            raise ValidationError("recovery rates must be positive")
        kind = str(self.kind).upper()
        if kind not in KINDS:
            raise ArgumentError(f"kind must be one of {KINDS}")
        b.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "kind", kind)

    @property
    def n(self) -> int:
        return self.B.shape[0]


@dataclass(frozen=True, eq=False)
class EpidemicState:
    s: np.ndarray
    x: np.ndarray
    r: np.ndarray
    t: float = 0.0


@dataclass(frozen=True, eq=False)
class SimulationResult:
    final: EpidemicState
    equilibrium: bool
    steps: int
    trajectory: np.ndarray | None = None  # rows: t, s_0.., x_0.., r_0..


def next_generation(system: EpidemicSystem) -> np.ndarray:
    """W = Gamma^{-1} B."""
    return system.B / system.gamma[:, None]


def _initial(system: EpidemicSystem, s0, x0):
    n = system.n
    x = np.full(n, 0.01) if x0 is None else np.array(x0, dtype=float).reshape(-1)
    if x.size == 1 and n > 1:
        x = np.full(n, x[0])
    s = 1.0 - x if s0 is None else np.array(s0, dtype=float).reshape(-1)
    if s.size == 1 and n > 1:
        s = np.full(n, s[0])
    if s.shape != (n,) or x.shape != (n,):
        raise ArgumentError("initial state vectors must have one entry per node")
    if np.any((s < 0) | (s > 1) | (x < 0) | (x > 1)) or not np.all(np.isfinite(s + x)):
        raise ArgumentError("initial fractions must lie in [0, 1]")
    if np.any(s + x > 1 + 1e-12):
        raise ArgumentError("s0 + x0 must not exceed 1")
    if system.kind == "SIS" and not np.allclose(s + x, 1.0, atol=1e-12, rtol=0):
        raise ArgumentError("SIS initial state needs s0 + x0 = 1")
    return s, x


def simulate(system: EpidemicSystem, s0=None, x0=None, step: float = 0.01, t_max: float = 2000.0,
             stride: int | None = None) -> SimulationResult:
    """Fixed-step RK4 integration until ||x||_inf < 1e-8 or t_max.

    SIS: x' = diag(1 - x) B x - Gamma x. SIR: s' = -diag(s) B x,
    x' = diag(s) B x - Gamma x, r = 1 - s - x. With ``stride`` the state is
    recorded every ``stride`` steps (plus the final state).
    """
    if not step > 0 or not np.isfinite(step):
        raise ArgumentError("step must be positive")
    if not t_max > 0 or not np.isfinite(t_max):
        raise ArgumentError("t_max must be positive")
    if stride is not None and stride < 1:
        raise ArgumentError("stride must be a positive integer")
    s, x = _initial(system, s0, x0)
    B, g = system.B, system.gamma
    sis = system.kind == "SIS"
    h = float(step)

    if sis:
        def rhs(y):
            return (1.0 - y) * (B @ y) - g * y
        y = x.copy()
    else:
        n = system.n

        def rhs(y):
            ss, xx = y[:n], y[n:]
            inf = ss * (B @ xx)
            return np.concatenate((-inf, inf - g * xx))
        y = np.concatenate((s, x))

    rows = []

    def record(t, yv):
        if sis:
            rows.append(np.concatenate(([t], 1.0 - yv, yv, np.zeros_like(yv))))
        else:
            ss, xx = yv[: system.n], yv[system.n:]
            rows.append(np.concatenate(([t], ss, xx, np.clip(1.0 - ss - xx, 0.0, 1.0))))

    n_steps = int(np.ceil(t_max / h - 1e-9))
    t = 0.0
    done = not np.any(x >= EQUILIBRIUM_TOL)
    if stride:
        record(t, y)
    k = 0
    while not done and k < n_steps:
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        k += 1
        t = k * h
        if np.any(y < -ESCAPE_TOL) or np.any(y > 1.0 + ESCAPE_TOL) or not np.all(np.isfinite(y)):
            raise InstabilityError(f"state left [0, 1] at t={t:.6g}; use a smaller step")
        np.clip(y, 0.0, 1.0, out=y)
        if not sis:
            # keep s + x <= 1 so the derived r stays a valid fraction
            over = y[: system.n] + y[system.n:] - 1.0
            if np.any(over > 0):
                y[: system.n] -= np.maximum(over, 0.0)
        xx = y if sis else y[system.n:]
        done = not np.any(xx >= EQUILIBRIUM_TOL)
        if stride and (k % stride == 0 or done or k == n_steps):
            record(t, y)

    if sis:
        x = y.copy()
        s = 1.0 - x
        r = np.zeros_like(x)
    else:
        s, x = y[: system.n].copy(), y[system.n:].copy()
        r = np.clip(1.0 - s - x, 0.0, 1.0)
    traj = np.array(rows) if stride else None
    return SimulationResult(EpidemicState(s, x, r, t), bool(done), k, traj)


def trajectory_header(n: int) -> list[str]:
    return ["t"] + [f"s_{i}" for i in range(n)] + [f"x_{i}" for i in range(n)] + [f"r_{i}" for i in range(n)]


def write_trajectory_csv(traj: np.ndarray, n: int, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(trajectory_header(n))
    for row in traj:
        w.writerow(["%.17g" % v for v in row])


@dataclass(frozen=True)
class PenetrationCheck:
    min_s: float
    bound: float
    holds: bool


def check_penetration(state: EpidemicState, r0: float, tol: float = PENETRATION_TOL) -> PenetrationCheck:
    """min_i s*_i <= 1/R0 (+ tol) at a disease-free equilibrium."""
    if not r0 > 0:
        raise ArgumentError("R0 must be positive")
    if np.max(np.abs(state.x)) >= EQUILIBRIUM_TOL:
        raise PreconditionError("state is not at a disease-free equilibrium (max x >= 1e-8)")
    min_s = float(np.min(state.s))
    bound = 1.0 / r0
    return PenetrationCheck(min_s, bound, min_s <= bound + tol)
