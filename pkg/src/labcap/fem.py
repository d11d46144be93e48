"""Semi-implicit P1 finite elements for the cross-diffusion system on (0, 2 pi).

Each backward-Euler step is linearized by a fixed-point sweep: the capital
equation is solved first with lagged coefficients, then the labor equation,
whose cross-diffusion term uses the capital iterate just computed. Mass is
lumped (trapezoidal nodal quadrature), so every solve is tridiagonal.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, ParameterError
from .model import Equilibrium, ScaledModelParams, g


@dataclass(frozen=True)
class Grid:
    n_nodes: int = 256
    x_min: float = 0.0
    x_max: float = 2.0 * math.pi

    def __post_init__(self):
        if self.n_nodes < 3:
            raise ParameterError(f"need at least 3 nodes, got {self.n_nodes}")
        if not self.x_max > self.x_min:
            raise ParameterError("empty interval")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_nodes - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_nodes)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_nodes, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w


@dataclass
class Field:
    L: np.ndarray
    K: np.ndarray

    def copy(self) -> "Field":
        return Field(self.L.copy(), self.K.copy())

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.L)) and np.all(np.isfinite(self.K)))

    @property
    def min_value(self) -> float:
        return float(min(self.L.min(), self.K.min()))


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 0.01
    tol_fp: float = 1e-6
    tol_s: float = 1e-8
    max_fp_iters: int = 50
    max_steps: int = 1_000_000
    snapshot_every: int = 100
    norm: str = "l2"

    def __post_init__(self):
        if not (self.tau > 0 and self.tol_fp > 0 and self.tol_s > 0):
            raise ParameterError("tau and tolerances must be positive")
        if self.max_fp_iters < 1 or self.max_steps < 1 or self.snapshot_every < 1:
            raise ParameterError("iteration limits must be at least 1")
        if self.norm not in ("l2", "euclidean"):
            raise ParameterError(f"norm must be 'l2' or 'euclidean', got {self.norm!r}")


@dataclass
class StepInfo:
    iterations: int
    first_increment: float
    last_increment: float


@dataclass
class Trajectory:
    grid: Grid
    snapshots: list = field(default_factory=list)
    final: Field | None = None
    t_final: float = 0.0
    steps: int = 0
    converged: bool = False
    fp_iterations_max: int = 0
    fp_iterations_total: int = 0
    negative_at: float | None = None
    warnings: list = field(default_factory=list)

    @property
    def T_s(self) -> float | None:
        """Time at which the stationary criterion first fired, None when it never did."""
        return self.t_final if self.converged else None

    @property
    def fp_iterations_mean(self) -> float:
        return self.fp_iterations_total / self.steps if self.steps else 0.0


def lumped_inner_product(u, v, grid: Grid) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (grid.n_nodes,) or v.shape != (grid.n_nodes,):
        raise ParameterError(f"expected vectors of length {grid.n_nodes}, got {u.shape} and {v.shape}")
    return float(np.sum(grid.weights * u * v))


def initial_condition(eq: Equilibrium, grid: Grid, amplitude: float = 0.05) -> Field:
    x = grid.x
    return Field(
        eq.L_star * (1.0 + amplitude * np.sin(10.0 * math.pi * x)),
        eq.K_star * (1.0 + amplitude * np.cos(10.0 * math.pi * x)),
    )


class Stepper:
    """Reusable work arrays for one (parameters, grid, config) triple."""

    def __init__(self, p: ScaledModelParams, grid: Grid, config: SolverConfig):
        self.p = p
        self.grid = grid
        self.config = config
        self.w = grid.weights
        self.mass = self.w / config.tau
        self._ab = np.zeros((3, grid.n_nodes))
        if config.norm == "l2":
            sw = np.sqrt(self.w)
            self.norm = lambda v: float(np.linalg.norm(sw * v))
        else:
            self.norm = lambda v: float(np.linalg.norm(v))

    def _solve(self, diffusivity, reaction_rate, rhs):
        # element coefficients -> tridiagonal (lumped mass + stiffness - reaction)
        ab = self._ab
        d = diffusivity / self.grid.h
        ab[1, :] = self.mass - self.w * reaction_rate
        ab[1, :-1] += d
        ab[1, 1:] += d
        ab[0, 1:] = -d
        ab[2, :-1] = -d
        return solve_banded((1, 1), ab, rhs, overwrite_ab=False, check_finite=False)

    def step(self, state: Field) -> tuple[Field, StepInfo]:
        p, gam = self.p, self.p.gamma
        h = self.grid.h
        L_old, K_old = state.L, state.K
        Lk, Kk = L_old, K_old
        rhs_K = self.mass * K_old
        first = last = math.inf
        for it in range(1, self.config.max_fp_iters + 1):
            K_mid = 0.5 * (Kk[1:] + Kk[:-1])
            K_new = self._solve(
                p.c2 - p.a2 * g(K_mid, p.K_s),
                gam * (p.alpha2 + Lk - p.beta2 * Kk),
                rhs_K,
            )
            L_mid = 0.5 * (Lk[1:] + Lk[:-1])
            flux = p.b * L_mid * (K_new[1:] - K_new[:-1]) / h
            rhs_L = self.mass * L_old
            rhs_L[:-1] -= flux
            rhs_L[1:] += flux
            L_new = self._solve(
                p.c1 + p.a1 * L_mid,
                gam * (p.alpha1 - p.beta1 * Lk + Kk),
                rhs_L,
            )
            last = max(self.norm(L_new - Lk), self.norm(K_new - Kk))
            if it == 1:
                first = last
            Lk, Kk = L_new, K_new
            if last < self.config.tol_fp:
                return Field(Lk, Kk), StepInfo(it, first, last)
        raise ConvergenceError(
            f"fixed-point iteration did not converge in {self.config.max_fp_iters} iterations "
            f"(last increment {last:.3e})",
            residual=last,
            iterations=self.config.max_fp_iters,
        )


def step(state: Field, p: ScaledModelParams, config: SolverConfig | None = None, grid: Grid | None = None):
    """Advance one time step; returns ``(new_state, StepInfo)``."""
    config = config or SolverConfig()
    grid = grid or Grid(len(state.L))
    return Stepper(p, grid, config).step(state)


def run_to_steady(
    state0: Field,
    p: ScaledModelParams,
    config: SolverConfig | None = None,
    grid: Grid | None = None,
    progress=None,
) -> Trajectory:
    """Time-step until the first fixed-point increment drops below ``tol_s``.

    ``progress``, if given, is called as ``progress(n, t, state, info)`` at
    every snapshot.
    """
    config = config or SolverConfig()
    grid = grid or Grid(len(state0.L))
    if not state0.is_finite:
        raise ParameterError("initial state has non-finite entries")
    stepper = Stepper(p, grid, config)
    traj = Trajectory(grid=grid)
    state = state0.copy()
    traj.snapshots.append((0.0, state.copy()))
    for n in range(1, config.max_steps + 1):
        state, info = stepper.step(state)
        t = n * config.tau
        traj.steps = n
        traj.fp_iterations_total += info.iterations
        traj.fp_iterations_max = max(traj.fp_iterations_max, info.iterations)
        if not state.is_finite:
            raise ConvergenceError(f"non-finite state at t={t}", iterations=n)
        if traj.negative_at is None and state.min_value < 0:
            traj.negative_at = t
            msg = f"negative nodal value {state.min_value:.3e} at t={t:g}"
            traj.warnings.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        done = info.first_increment < config.tol_s
        if n % config.snapshot_every == 0 or done:
            traj.snapshots.append((t, state.copy()))
            if progress is not None:
                progress(n, t, state, info)
        if done:
            traj.converged = True
            break
    else:
        traj.warnings.append(f"max_steps={config.max_steps} reached before the stationary criterion")
    traj.final = state
    traj.t_final = traj.steps * config.tau
    return traj


def write_profile_csv(path, grid: Grid, state: Field):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "L", "K"])
        for row in zip(grid.x, state.L, state.K):
            wr.writerow([repr(float(v)) for v in row])
