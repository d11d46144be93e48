"""CES production, profit maximization and the induced Lotka-Volterra reaction.

Matrices and coefficient pairs are ordered (labor, capital) throughout, while
the production-function arguments keep the conventional ``(K, L)`` order.
The output price is the numeraire (p = 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, ParameterError

CONVENTIONS = ("exact", "published")


@dataclass(frozen=True)
class CesParams:
    A: float
    alpha: float
    beta: float
    epsilon: float
    eta: float

    def __post_init__(self):
        if not self.A > 0:
            raise ParameterError(f"A must be positive, got {self.A}")
        for name in ("alpha", "beta", "epsilon"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ParameterError(f"{name} must lie in (0, 1), got {v}")
        if not self.eta < 1 or self.eta == 0:
            raise ParameterError(f"eta must satisfy eta < 1, eta != 0, got {self.eta}")
        if self.epsilon < self.eta:
            raise ParameterError(
                f"epsilon >= eta required, got epsilon={self.epsilon}, eta={self.eta}"
            )


@dataclass(frozen=True)
class FactorPrices:
    w_star: float
    r_star: float

    def __post_init__(self):
        if not (self.w_star > 0 and self.r_star > 0):
            raise ParameterError(f"factor prices must be positive, got {self}")


@dataclass(frozen=True)
class LotkaVolterraCoeffs:
    """Coefficients of dL/dt = L(a1 + b11 L + b12 K), dK/dt = K(a2 + b21 L + b22 K)."""

    alpha1_t: float
    alpha2_t: float
    b11_t: float
    b12_t: float
    b21_t: float
    b22_t: float
    L_e: float
    K_e: float

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def B(self) -> np.ndarray:
        return np.array([[self.b11_t, self.b12_t], [self.b21_t, self.b22_t]])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([self.alpha1_t, self.alpha2_t])

    def sign_violations(self) -> list[str]:
        """Names of the required sign conditions that fail (empty when all hold)."""
        checks = {
            "alpha1_t > 0": self.alpha1_t > 0,
            "alpha2_t > 0": self.alpha2_t > 0,
            "b11_t < 0": self.b11_t < 0,
            "b22_t < 0": self.b22_t < 0,
            "b12_t = b21_t >= 0": self.b12_t == self.b21_t and self.b12_t >= 0,
            "det(B) > 0": float(np.linalg.det(self.B)) > 0,
        }
        return [k for k, ok in checks.items() if not ok]


def _check_inputs(K, L):
    if np.any(np.asarray(K) <= 0) or np.any(np.asarray(L) <= 0):
        raise ParameterError(f"K and L must be positive, got K={K}, L={L}")


def ces_output(p: CesParams, K, L):
    _check_inputs(K, L)
    return p.A * (p.alpha * K**p.eta + p.beta * L**p.eta) ** (p.epsilon / p.eta)


def marginal_products(p: CesParams, K, L):
    """Return ``(dY/dL, dY/dK)``."""
    _check_inputs(K, L)
    S = p.alpha * K**p.eta + p.beta * L**p.eta
    common = p.A * p.epsilon * S ** (p.epsilon / p.eta - 1.0)
    return common * p.beta * L ** (p.eta - 1.0), common * p.alpha * K ** (p.eta - 1.0)


def profits(p: CesParams, f: FactorPrices, K, L):
    return ces_output(p, K, L) - f.w_star * L - f.r_star * K


def _rho(p: CesParams, f: FactorPrices) -> float:
    a, b, e, n = p.alpha, p.beta, p.epsilon, p.eta
    ratio = (f.w_star / f.r_star) ** (n / (1 - n)) * (a / b) ** (1 / (1 - n))
    return p.A * e * (1.0 + ratio) ** ((e - n) / n)


def profits_optimum(p: CesParams, f: FactorPrices) -> tuple[float, float]:
    """Maximizer ``(L_e, K_e)`` of the profits at constant prices (w*, r*)."""
    if p.epsilon >= 1:
        raise ParameterError("profits optimum needs epsilon < 1")
    a, b, e, n = p.alpha, p.beta, p.epsilon, p.eta
    L_e = (_rho(p, f) / f.w_star * b ** (e / n)) ** (1.0 / (1.0 - e))
    _check_representable(L_e)
    # ratio of the two first-order conditions
    K_e = (f.r_star * b / (f.w_star * a)) ** (1.0 / (n - 1.0)) * L_e
    _check_representable(K_e)
    YL, YK = marginal_products(p, K_e, L_e)
    res = max(abs(YL / f.w_star - 1.0), abs(YK / f.r_star - 1.0))
    if res > 1e-10:
        raise ConsistencyError(f"first-order conditions violated at optimum (rel. residual {res:.3e})")
    return float(L_e), float(K_e)


def _check_representable(*vals):
    for v in vals:
        if not (np.isfinite(v) and 1e-150 < v < 1e150):
            raise ParameterError(f"optimum {v} is outside the representable range for these inputs")


def published_optimum(p: CesParams, f: FactorPrices) -> tuple[float, float]:
    """Closed form as commonly printed for this optimum.

    The labor component is the true optimum; the capital component uses the
    same prefactor with (r*, alpha) and does not satisfy the capital
    first-order condition unless w*/r* and alpha/beta are balanced. It is
    kept because the published coefficient table was computed from it.
    """
    a, b, e, n = p.alpha, p.beta, p.epsilon, p.eta
    rho = _rho(p, f)
    L_e = (rho / f.w_star * b ** (e / n)) ** (1.0 / (1.0 - e))
    K_e = (rho / f.r_star * a ** (e / n)) ** (1.0 / (1.0 - e))
    _check_representable(L_e, K_e)
    return float(L_e), float(K_e)


def profits_hessian(p: CesParams, K, L, prices: FactorPrices | None = None) -> np.ndarray:
    """Hessian of the profits in (L, K) order.

    The closed form is written in terms of the wage and rental rate. With
    ``prices=None`` the marginal products stand in for them, which makes the
    result the exact Hessian at any point; passing ``prices`` evaluates the
    price form verbatim, which agrees with the exact one only at the optimum.
    """
    _check_inputs(K, L)
    a, b, e, n = p.alpha, p.beta, p.epsilon, p.eta
    if prices is None:
        w, r = marginal_products(p, K, L)
    else:
        w, r = prices.w_star, prices.r_star
    S = a * K**n + b * L**n
    return np.array(
        [
            [(b * (e - n) / S * w * L**n - (1 - n) * w) / L, a * (e - n) / S * w * K ** (n - 1)],
            [b * (e - n) / S * r * L ** (n - 1), (a * (e - n) / S * r * K**n - (1 - n) * r) / K],
        ]
    )


def derive_lv(p: CesParams, f: FactorPrices, convention: str = "exact") -> LotkaVolterraCoeffs:
    """Lotka-Volterra reaction coefficients from the profits Hessian.

    ``convention="exact"`` linearizes at the true optimum. ``"published"``
    reproduces the coefficient table: printed optimum, price-form Hessian,
    and its labor-row cross entry used as the common mutualism coefficient.
    """
    if convention == "exact":
        L_e, K_e = profits_optimum(p, f)
        H = profits_hessian(p, K_e, L_e)
        if abs(H[0, 1] - H[1, 0]) > 1e-12 * max(abs(H[0, 1]), 1.0):
            raise ConsistencyError(f"Hessian not symmetric at the optimum: {H}")
        b12 = b21 = 0.5 * (H[0, 1] + H[1, 0])
        B = np.array([[H[0, 0], b12], [b21, H[1, 1]]])
        a1, a2 = -B @ np.array([L_e, K_e])
        lv = LotkaVolterraCoeffs(a1, a2, H[0, 0], b12, b21, H[1, 1], L_e, K_e)
        if not np.all(np.isfinite(B)):
            raise ParameterError("Hessian overflows for these inputs")
        _verify_exact(lv, p, f)
    elif convention == "published":
        L_e, K_e = published_optimum(p, f)
        H = profits_hessian(p, K_e, L_e, prices=f)
        # row sums of the price form give these identically
        a1, a2 = f.w_star * (1 - p.epsilon), f.r_star * (1 - p.epsilon)
        lv = LotkaVolterraCoeffs(a1, a2, H[0, 0], H[0, 1], H[0, 1], H[1, 1], L_e, K_e)
    else:
        raise ParameterError(f"unknown convention {convention!r}; expected one of {CONVENTIONS}")
    if not all(np.isfinite([a1, a2, lv.b11_t, lv.b12_t, lv.b22_t])):
        raise ParameterError("Lotka-Volterra coefficients overflow for these inputs")
    bad = lv.sign_violations()
    if convention == "published":
        # not guaranteed off the true optimum; the equilibrium stage reports it
        bad = [b for b in bad if b != "det(B) > 0"]
    if bad:
        raise ConsistencyError(f"Lotka-Volterra sign structure violated: {bad}")
    return lv


def _verify_exact(lv: LotkaVolterraCoeffs, p: CesParams, f: FactorPrices):
    expected = (f.w_star * (1 - p.epsilon), f.r_star * (1 - p.epsilon))
    for got, want in zip((lv.alpha1_t, lv.alpha2_t), expected):
        if abs(got - want) > 1e-10 * abs(want):
            raise ConsistencyError(f"growth rate {got} differs from {want}")
    det_expected = (1 - p.epsilon) * (1 - p.eta) * f.w_star * f.r_star / lv.L_e / lv.K_e
    det = float(np.linalg.det(lv.B))
    if not (np.isfinite(det) and np.isfinite(det_expected)):
        raise ParameterError("det(B) is not representable for these inputs")
    if abs(det - det_expected) > 1e-8 * abs(det_expected):
        raise ConsistencyError(f"det(B) = {det} differs from closed form {det_expected}")
