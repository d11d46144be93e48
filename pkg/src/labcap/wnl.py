"""Weakly nonlinear (multiple-scales) analysis near the Turing threshold.

With eps^2 = (b - b_c) / b_c the perturbation of the equilibrium is expanded
as w = eps w1 + eps^2 w2 + ..., w1 = A rho cos(k_c x), and solvability at
third order gives the amplitude equation dA/dT = sigma A - ell A^3.

Sign convention for the saturation terms: the capital flux is
(c2 - a2 g(K)) K_x, so expanding -a2 g(K) K_x about K* produces
-a2 g'(K*) in the quadratic form and -a2 g''(K*) / 6 (w2^3)_xx at cubic order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, CriticalityError, ParameterError, RegimeError
from .model import Equilibrium, ScaledModelParams, saturation_g
from .stability import build_matrices, critical_threshold

E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


def critical_mode_bar(k_c: float) -> float:
    """Nearest admissible Neumann wavenumber n/2 to k_c (ties round up)."""
    return math.floor(2.0 * k_c + 0.5) / 2.0


def control_parameter(b: float, b_c: float) -> float:
    if b < b_c:
        raise ParameterError(f"b = {b} is below the threshold b_c = {b_c}")
    return math.sqrt((b - b_c) / b_c)


@dataclass(frozen=True)
class WnlVectors:
    rho: np.ndarray
    eta: np.ndarray
    k_c: float
    k_bar_c: float
    b_c: float

    @property
    def overlap(self) -> float:
        return float(self.rho @ self.eta)


def null_vectors(p: ScaledModelParams, eq: Equilibrium, b_c: float, k_c: float, rtol: float = 1e-8) -> WnlVectors:
    """Right/left kernel vectors (M, 1) and (1, M*) of gamma R - k_c^2 Q(b_c)."""
    m = build_matrices(p, eq, b_c)
    A = m.A(k_c, p.gamma)
    denom = A[1, 0]
    if denom == 0:
        raise ConsistencyError("gamma R21 - k_c^2 Q21 vanishes")
    rho = np.array([-A[1, 1] / denom, 1.0])
    eta = np.array([1.0, -A[0, 0] / denom])
    scale = np.linalg.norm(A, 2)
    res_r = np.linalg.norm(A @ rho) / np.linalg.norm(rho)
    res_l = np.linalg.norm(eta @ A) / np.linalg.norm(eta)
    if max(res_r, res_l) > rtol * scale:
        raise CriticalityError(
            f"matrix is not singular at (b_c, k_c): residuals {res_r:.3e}, {res_l:.3e} vs {scale:.3e}"
        )
    v = WnlVectors(rho, eta, k_c, critical_mode_bar(k_c), b_c)
    if v.overlap == 0:
        raise ConsistencyError("<rho, eta> = 0")
    return v


class QuadraticForms:
    """Bilinear parts of the reaction (Q_R) and of the nonlinear diffusion (Q_Q)."""

    def __init__(self, p: ScaledModelParams, eq: Equilibrium):
        self.gamma = p.gamma
        self.beta1, self.beta2 = p.beta1, p.beta2
        self.a1 = p.a1
        _, gp, gpp = saturation_g(eq.K_star, p.K_s)
        self.sat1 = -p.a2 * gp
        self.sat2 = -p.a2 * gpp

    def q_r(self, x, y) -> np.ndarray:
        cross = x[0] * y[1] + x[1] * y[0]
        return self.gamma * np.array(
            [-2.0 * self.beta1 * x[0] * y[0] + cross, -2.0 * self.beta2 * x[1] * y[1] + cross]
        )

    def q_q(self, x, y) -> np.ndarray:
        return np.array([self.a1 * x[0] * y[0], self.sat1 * x[1] * y[1]])

    def m(self, j: int, x, y, k_c: float) -> np.ndarray:
        return self.q_r(x, y) - j * j * k_c**2 * self.q_q(x, y)


def second_order_corrections(v: WnlVectors, p: ScaledModelParams, eq: Equilibrium, forms: QuadraticForms | None = None):
    """Solve L_0 w20 = -M_0(rho, rho)/4 and L_2 w22 = -M_2(rho, rho)/4 - b_c k_c^2 rho1 rho2 e1."""
    forms = forms or QuadraticForms(p, eq)
    m = build_matrices(p, eq, v.b_c)
    k2 = v.k_c**2
    L0 = p.gamma * m.R
    L2 = p.gamma * m.R - 4.0 * k2 * m.Q
    rhs0 = -0.25 * forms.m(0, v.rho, v.rho, v.k_c)
    rhs2 = -0.25 * forms.m(2, v.rho, v.rho, v.k_c) - v.b_c * k2 * v.rho[0] * v.rho[1] * E1
    out = []
    for mat, rhs in ((L0, rhs0), (L2, rhs2)):
        if abs(np.linalg.det(mat)) < 1e-14 * np.linalg.norm(mat) ** 2:
            raise ConsistencyError(f"singular second-order system {mat}")
        sol = np.linalg.solve(mat, rhs)
        res = np.linalg.norm(mat @ sol - rhs)
        if res > 1e-10 * max(np.linalg.norm(rhs), np.linalg.norm(mat) * np.linalg.norm(sol), 1e-300):
            raise ConsistencyError(f"second-order residual {res:.3e}")
        out.append(sol)
    return out[0], out[1]


def cubic_coefficient_vector(v: WnlVectors, w20, w22, p: ScaledModelParams, eq: Equilibrium, forms: QuadraticForms | None = None):
    """G3: the A^3 cos(k_c x) part of the third-order forcing."""
    forms = forms or QuadraticForms(p, eq)
    rho, k_c, b_c = v.rho, v.k_c, v.b_c
    k2 = k_c**2
    return (
        -(forms.m(1, rho, w20, k_c) + 0.5 * forms.m(1, rho, w22, k_c))
        - k2 * b_c * rho[0] * w22[1] * E1
        - 0.5 * k2 * b_c * rho[1] * (2.0 * w20[0] - w22[0]) * E1
        # (sat2 / 6) (w2^3)_xx, cos^3 = (3 cos + cos 3)/4
        - 0.125 * forms.sat2 * k2 * rho[1] ** 3 * E2
    )


@dataclass
class WnlResult:
    vectors: WnlVectors
    sigma: float
    ell: float
    w20: np.ndarray
    w22: np.ndarray
    b: float
    L_star: float
    K_star: float

    @property
    def regime(self) -> str:
        return "supercritical" if self.ell > 0 else "subcritical"

    @property
    def A_inf(self) -> float | None:
        return math.sqrt(self.sigma / self.ell) if self.ell > 0 else None

    @property
    def epsilon_ctrl(self) -> float:
        return control_parameter(self.b, self.vectors.b_c)

    def perturbation(self, x, sign: int = 1):
        """Second-order pattern correction w(x) as an array of shape (2, len(x)).

        ``sign=-1`` flips the first harmonic, i.e. the other branch A = -A_inf,
        which on the Neumann interval is the half-period shifted pattern.
        """
        if sign not in (1, -1):
            raise ParameterError("sign must be +1 or -1")
        if self.ell <= 0:
            raise RegimeError("cubic amplitude equation gives no amplitude in the subcritical regime")
        x = np.asarray(x, dtype=float)
        eps = self.epsilon_ctrl
        amp2 = self.sigma / self.ell
        kb = self.vectors.k_bar_c
        first = sign * eps * math.sqrt(amp2) * np.outer(self.vectors.rho, np.cos(kb * x))
        second = eps**2 * amp2 * (self.w20[:, None] + np.outer(self.w22, np.cos(2.0 * kb * x)))
        return first + second


def stuart_landau(v: WnlVectors, w20, w22, p: ScaledModelParams, eq: Equilibrium, b2: float | None = None):
    """Return ``(sigma, ell)``.

    ``b2`` is the second-order coefficient of b = b_c + eps^2 b2; with
    eps^2 = (b - b_c)/b_c it equals b_c, the default.
    """
    b2 = v.b_c if b2 is None else b2
    overlap = v.overlap
    if overlap == 0:
        raise ConsistencyError("<rho, eta> = 0")
    G1 = -(v.k_c**2) * eq.L_star * b2 * v.rho[1] * E1
    G3 = cubic_coefficient_vector(v, w20, w22, p, eq)
    return float(-(G1 @ v.eta) / overlap), float((G3 @ v.eta) / overlap)


def analyze(p: ScaledModelParams, eq: Equilibrium, b: float | None = None, b2: float | None = None) -> WnlResult:
    """Full weakly nonlinear pipeline at bifurcation parameter ``b`` (default ``p.b``)."""
    b = p.b if b is None else b
    rep = critical_threshold(p, eq, b)
    v = null_vectors(p, eq, rep.b_c, rep.k_c)
    forms = QuadraticForms(p, eq)
    w20, w22 = second_order_corrections(v, p, eq, forms)
    sigma, ell = stuart_landau(v, w20, w22, p, eq, b2)
    if not sigma > 0:
        raise ConsistencyError(f"growth-rate coefficient must be positive, got {sigma}")
    return WnlResult(v, sigma, ell, w20, w22, float(b), eq.L_star, eq.K_star)


def assemble_pattern(result: WnlResult, x, sign: int = 1):
    """Equilibrium plus the second-order correction, sampled at ``x``."""
    w = result.perturbation(x, sign)
    return result.L_star + w[0], result.K_star + w[1]


def order2_fredholm_residual(v: WnlVectors, p: ScaledModelParams, eq: Equilibrium, n: int = 64) -> float:
    """<F, eta cos(k_c x)> over one period for the order-eps^2 forcing (A = 1, T1 = b1 = 0).

    F is assembled pointwise from w1 = rho cos(k_c x) and its exact derivatives.
    """
    forms = QuadraticForms(p, eq)
    k = v.k_c
    x = np.linspace(0.0, 2 * math.pi / k, n, endpoint=False)
    c, s = np.cos(k * x), np.sin(k * x)
    w1 = np.outer(v.rho, c)
    w1x = np.outer(v.rho, -k * s)
    w1xx = np.outer(v.rho, -k * k * c)
    QR = forms.q_r(w1, w1)
    # (x y)_xx = x_xx y + 2 x_x y_x + x y_xx for each component
    prod_xx = np.array([2 * (w1xx[i] * w1[i] + w1x[i] ** 2) for i in range(2)])
    QQ_xx = np.array([forms.a1 * prod_xx[0], forms.sat1 * prod_xx[1]])
    # d/dx (w11 d/dx w12)
    cross = w1x[0] * w1x[1] + w1[0] * w1xx[1]
    F = -0.5 * (QR + QQ_xx) + v.b_c * np.outer(E1, cross)
    proj = (v.eta @ F) * c
    return float(abs(proj.mean()) * 2 * math.pi / k)
