"""Turing analysis of the coexistence equilibrium.

Perturbations ~ exp(lambda t) cos(k x) evolve with A_k = gamma R - k^2 Q; since
tr(A_k) < 0 for every k, instability can only come from det(A_k) < 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, ParameterError
from .model import Equilibrium, ScaledModelParams, g


@dataclass(frozen=True)
class LinearizedMatrices:
    R: np.ndarray
    Q: np.ndarray

    @property
    def det_R(self) -> float:
        return float(self.R[0, 0] * self.R[1, 1] - self.R[0, 1] * self.R[1, 0])

    @property
    def det_Q(self) -> float:
        # upper triangular
        return float(self.Q[0, 0] * self.Q[1, 1])

    def A(self, k, gamma: float) -> np.ndarray:
        return gamma * self.R - k**2 * self.Q


def build_matrices(p: ScaledModelParams, eq: Equilibrium, b: float | None = None) -> LinearizedMatrices:
    b = p.b if b is None else b
    L, K = eq.L_star, eq.K_star
    R = np.array([[-p.beta1 * L, L], [K, -p.beta2 * K]])
    Q = np.array([[p.c1 + p.a1 * L, -b * L], [0.0, p.c2 - p.a2 * g(K, p.K_s)]])
    return LinearizedMatrices(R, Q)


@dataclass
class DispersionCurve:
    b: float
    k: np.ndarray
    det: np.ndarray
    trace: np.ndarray
    re_lambda1: np.ndarray
    re_lambda2: np.ndarray

    @property
    def max_growth(self) -> np.ndarray:
        return np.maximum(self.re_lambda1, self.re_lambda2)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["k", "detAk", "reLambda1", "reLambda2"])
            for row in zip(self.k, self.det, self.re_lambda1, self.re_lambda2):
                wr.writerow([repr(float(v)) for v in row])


def dispersion(p: ScaledModelParams, eq: Equilibrium, b: float | None = None, k_grid=None) -> DispersionCurve:
    """Sample det(A_k) and the real parts of both eigenvalues on ``k_grid``.

    The default grid is 2048 points on [0, 3 k_c].
    """
    b = p.b if b is None else b
    m = build_matrices(p, eq, b)
    if k_grid is None:
        k_grid = np.linspace(0.0, 3.0 * critical_wavenumber(p, eq), 2048)
    k = np.asarray(k_grid, dtype=float)
    if np.any(k < 0):
        raise ParameterError("wavenumbers must be non-negative")
    k2 = k**2
    a11 = p.gamma * m.R[0, 0] - k2 * m.Q[0, 0]
    a12 = p.gamma * m.R[0, 1] - k2 * m.Q[0, 1]
    a21 = p.gamma * m.R[1, 0] - k2 * m.Q[1, 0]
    a22 = p.gamma * m.R[1, 1] - k2 * m.Q[1, 1]
    tr = a11 + a22
    det = a11 * a22 - a12 * a21
    root = np.sqrt((tr**2 - 4.0 * det).astype(complex))
    lam1 = 0.5 * (tr - root)
    lam2 = 0.5 * (tr + root)
    return DispersionCurve(float(b), k, det, tr, lam1.real, lam2.real)


def critical_wavenumber(p: ScaledModelParams, eq: Equilibrium) -> float:
    m = build_matrices(p, eq, 0.0)
    return math.sqrt(p.gamma * math.sqrt(m.det_R / m.det_Q))


def h_poly(p: ScaledModelParams, eq: Equilibrium, b: float, s):
    """det(A_k) as the quadratic det(Q) s^2 + gamma q s + gamma^2 det(R) in s = k^2."""
    m = build_matrices(p, eq, b)
    L, K = eq.L_star, eq.K_star
    m1 = L * K
    m2 = p.beta1 * L * m.Q[1, 1] + p.beta2 * K * m.Q[0, 0]
    q = m2 - b * m1
    return m.det_Q * s**2 + p.gamma * q * s + p.gamma**2 * m.det_R


@dataclass
class StabilityReport:
    b: float
    b_c: float
    k_c: float
    m1: float
    m2: float
    q: float
    det_R: float
    det_Q: float
    k_m_sq: float | None
    k1_sq: float | None
    k2_sq: float | None
    necessary_condition: bool
    is_turing_unstable: bool
    sufficient_condition_bif: bool
    sufficient_condition_bif2: bool | None
    admissible_modes: list = field(default_factory=list)

    @property
    def has_admissible_mode(self) -> bool:
        return bool(self.admissible_modes)


def _threshold_terms(p: ScaledModelParams, eq: Equilibrium):
    m = build_matrices(p, eq, 0.0)
    L, K = eq.L_star, eq.K_star
    m1 = L * K
    if m1 == 0:
        raise ParameterError("degenerate equilibrium (L* K* = 0)")
    m2 = p.beta1 * L * m.Q[1, 1] + p.beta2 * K * m.Q[0, 0]
    return m, m1, m2


def critical_threshold(p: ScaledModelParams, eq: Equilibrium, b: float | None = None) -> StabilityReport:
    """Critical bifurcation value, critical wavenumber and the state at ``b`` (default ``p.b``)."""
    b = p.b if b is None else b
    m, m1, m2 = _threshold_terms(p, eq)
    det_R, det_Q = m.det_R, m.det_Q
    b_c = (m2 + 2.0 * math.sqrt(det_R * det_Q)) / m1
    k_c = math.sqrt(p.gamma * math.sqrt(det_R / det_Q))
    q = m2 - b * m1
    k_m_sq = -p.gamma * q / (2.0 * det_Q) if q < 0 else None
    band = unstable_band(p, eq, b)
    bif, bif2 = sufficient_conditions(p, eq, b)
    modes = modes_in_band(band) if band is not None and band[0] != band[1] else []
    return StabilityReport(
        b=b, b_c=b_c, k_c=k_c, m1=m1, m2=m2, q=q, det_R=det_R, det_Q=det_Q,
        k_m_sq=k_m_sq,
        k1_sq=None if band is None else band[0],
        k2_sq=None if band is None else band[1],
        necessary_condition=b > m2 / m1,
        is_turing_unstable=b > b_c,
        sufficient_condition_bif=bif,
        sufficient_condition_bif2=bif2,
        admissible_modes=modes,
    )


def unstable_band(p: ScaledModelParams, eq: Equilibrium, b: float, rtol: float = 1e-12):
    """Roots ``(k1^2, k2^2)`` of h, or None when there is no unstable band.

    At tangency (b = b_c up to ``rtol``) the double root k_m^2 is returned twice.
    """
    m, m1, m2 = _threshold_terms(p, eq)
    q = m2 - b * m1
    if q >= 0:
        return None
    a = m.det_Q
    B = p.gamma * q
    c = p.gamma**2 * m.det_R
    disc = B * B - 4.0 * a * c
    if disc < -rtol * B * B:
        return None
    disc = max(disc, 0.0)
    # B < 0: no cancellation in -B + sqrt(disc)
    t = 0.5 * (-B + math.sqrt(disc))
    s2 = t / a
    s1 = c / t
    return (min(s1, s2), max(s1, s2))


def modes_in_band(band) -> list[float]:
    """Neumann modes k = n/2 on (0, 2 pi) with k^2 strictly inside the band."""
    if band is None:
        return []
    lo, hi = band
    n_lo = max(1, math.floor(2.0 * math.sqrt(lo)))
    n_hi = math.ceil(2.0 * math.sqrt(hi))
    return [n / 2 for n in range(n_lo, n_hi + 1) if lo < (n / 2) ** 2 < hi]


def sufficient_conditions(p: ScaledModelParams, eq: Equilibrium, b: float | None = None):
    """Evaluate the two sufficient instability inequalities.

    The second applies only when alpha1 == alpha2 and is None otherwise.
    """
    b = p.b if b is None else b
    L, K = eq.L_star, eq.K_star
    sat = p.a2 * g(K, p.K_s)
    bif = b / 2 + p.beta1 / K * sat > p.beta1 / K * p.c2 + p.beta2 / L * p.c1 + p.beta2 * p.a1
    if p.alpha1 != p.alpha2:
        return bool(bif), None
    detB = p.beta1 * p.beta2 - 1.0
    alpha = p.alpha1
    bif2 = b / 2 + detB / alpha * sat > detB / alpha * (p.c1 + p.c2) + p.beta2 * p.a1
    return bool(bif), bool(bif2)


@dataclass
class OdeTrajectory:
    t: np.ndarray
    L: np.ndarray
    K: np.ndarray


def reaction_ode_integrate(
    p: ScaledModelParams,
    initial,
    t_end: float,
    dt: float = 0.01,
    min_dt: float = 1e-10,
    record_every: int = 1,
) -> OdeTrajectory:
    """Classical RK4 for the space-independent reaction system.

    A step that yields non-finite or negative values is retried at half the
    step size; falling below ``min_dt`` raises ConvergenceError.
    """
    L0, K0 = initial
    if L0 < 0 or K0 < 0:
        raise ParameterError("initial state must be non-negative")

    def f(u):
        return np.array(p.reaction(u[0], u[1]))

    u = np.array([L0, K0], dtype=float)
    t = 0.0
    ts, Ls, Ks = [t], [u[0]], [u[1]]
    n = 0
    h = dt
    while t < t_end - 1e-12 * max(1.0, t_end):
        h = min(h, t_end - t)
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        nxt = u + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(nxt)) or np.any(nxt < 0):
            h *= 0.5
            if h < min_dt:
                raise ConvergenceError(f"step-size underflow at t={t}", iterations=n)
            continue
        u = nxt
        t += h
        h = dt
        n += 1
        if n % record_every == 0 or t >= t_end:
            ts.append(t)
            Ls.append(u[0])
            Ks.append(u[1])
    return OdeTrajectory(np.array(ts), np.array(Ls), np.array(Ks))
