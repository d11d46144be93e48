"""The rescaled labor/capital cross-diffusion system.

    L_t = ((c1 + a1 L) L_x - b L K_x)_x + gamma L (alpha1 - beta1 L + K)
    K_t = ((c2 - a2 g(K)) K_x)_x        + gamma K (alpha2 + L - beta2 K)

on (0, 2 pi) with no-flux boundaries, g(K) = K / (K_s^2 + K^2).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .ces import LotkaVolterraCoeffs
from .errors import ConsistencyError, ParameterError

KS_OVER_KSTAR = 10.0


def saturation_g(K, K_s):
    """Return ``(g, g', g'')`` at K."""
    s = K_s**2 + K**2
    return K / s, (K_s**2 - K**2) / s**2, 2.0 * K * (K**2 - 3.0 * K_s**2) / s**3


def g(K, K_s):
    return K / (K_s**2 + K**2)


@dataclass(frozen=True)
class RawDiffusion:
    """Diffusion coefficients before the change of variables."""

    c1: float
    c2: float
    a11: float
    a12: float
    a22: float
    K_s: float


@dataclass(frozen=True)
class ScaledModelParams:
    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    c1: float
    c2: float
    a1: float
    a2: float
    b: float
    K_s: float
    gamma: float = 1.0

    def __post_init__(self):
        for name, v in asdict(self).items():
            if not np.isfinite(v) or v < 0:
                raise ParameterError(f"{name} must be finite and non-negative, got {v}")
        if self.K_s <= 0:
            raise ParameterError(f"K_s must be positive, got {self.K_s}")
        if self.c1 + self.a1 <= 0:
            raise ParameterError("ellipticity requires c1 + a1 > 0")
        if self.c2 <= self.a2 * g(self.K_s, self.K_s):
            raise ParameterError(
                f"ellipticity requires c2 > a2 g(K_s) = {self.a2 * g(self.K_s, self.K_s)}"
            )

    def check_assumptions(self):
        """Raise unless the pattern-formation analysis applies (beta1 beta2 > 1, gamma > 0)."""
        if self.beta1 * self.beta2 <= 1:
            raise ParameterError(
                f"competition must dominate mutualism: beta1*beta2 = {self.beta1 * self.beta2} <= 1"
            )
        if self.gamma <= 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")

    def with_b(self, b: float) -> "ScaledModelParams":
        return replace(self, b=float(b))

    def reaction(self, L, K):
        """Reaction right-hand sides ``(f_L, f_K)``."""
        return (
            self.gamma * L * (self.alpha1 - self.beta1 * L + K),
            self.gamma * K * (self.alpha2 + L - self.beta2 * K),
        )


@dataclass(frozen=True)
class Equilibrium:
    L_star: float
    K_star: float

    def as_array(self) -> np.ndarray:
        return np.array([self.L_star, self.K_star])


def equilibrium(p: ScaledModelParams) -> Equilibrium:
    det = p.beta1 * p.beta2 - 1.0
    if det <= 0:
        raise ParameterError(f"no coexistence equilibrium: beta1*beta2 - 1 = {det} <= 0")
    L = (p.alpha2 + p.alpha1 * p.beta2) / det
    K = (p.alpha1 + p.alpha2 * p.beta1) / det
    scale = max(p.alpha1, p.alpha2, p.beta1 * L, p.beta2 * K, L, K)
    r1 = p.alpha1 - p.beta1 * L + K
    r2 = p.alpha2 + L - p.beta2 * K
    if max(abs(r1), abs(r2)) > 1e-12 * scale:
        raise ConsistencyError(f"reaction does not vanish at equilibrium: {r1}, {r2}")
    if L <= 0 or K <= 0:
        raise ParameterError(f"equilibrium is not positive: ({L}, {K})")
    return Equilibrium(float(L), float(K))


def rescale(lv: LotkaVolterraCoeffs, diffusion: RawDiffusion, gamma: float = 1.0) -> ScaledModelParams:
    """Change of variables L -> b21 L, K -> b12 K removing the mutualism coefficients."""
    b12, b21 = lv.b12_t, lv.b21_t
    if not b12 == b21:
        raise ParameterError(f"symmetric mutualism required, got b12={b12}, b21={b21}")
    if not b12 > 0:
        raise ParameterError("strict mutualism (b12 > 0, i.e. epsilon > eta) is required to rescale")
    return ScaledModelParams(
        alpha1=lv.alpha1_t,
        alpha2=lv.alpha2_t,
        beta1=abs(lv.b11_t) / b21,
        beta2=abs(lv.b22_t) / b12,
        c1=diffusion.c1,
        c2=diffusion.c2,
        a1=diffusion.a11 / b21,
        a2=diffusion.a22 * b12,
        b=diffusion.a12 / b12,
        K_s=diffusion.K_s * b12,
        gamma=gamma,
    )


def scaled_params(
    lv: LotkaVolterraCoeffs,
    c1: float,
    c2: float,
    a1: float,
    a2: float,
    gamma: float = 1.0,
    b: float = 0.0,
    K_s: float | None = None,
) -> ScaledModelParams:
    """Build scaled parameters from already-rescaled diffusion coefficients.

    ``K_s`` defaults to ten times the scaled capital equilibrium.
    """
    if not lv.b12_t > 0:
        raise ParameterError("strict mutualism (b12 > 0) is required")
    beta1 = abs(lv.b11_t) / lv.b21_t
    beta2 = abs(lv.b22_t) / lv.b12_t
    if K_s is None:
        det = beta1 * beta2 - 1.0
        if det <= 0:
            raise ParameterError(f"no coexistence equilibrium: beta1*beta2 - 1 = {det} <= 0")
        K_s = KS_OVER_KSTAR * (lv.alpha1_t + lv.alpha2_t * beta1) / det
    return ScaledModelParams(
        alpha1=lv.alpha1_t, alpha2=lv.alpha2_t, beta1=beta1, beta2=beta2,
        c1=c1, c2=c2, a1=a1, a2=a2, b=b, K_s=K_s, gamma=gamma,
    )
