"""FEM versus weakly nonlinear comparison metrics."""

from __future__ import annotations

import math

import numpy as np
from scipy.fft import dct

from ..errors import ParameterError
from ..fem import Field, Grid
from ..wnl import WnlResult, assemble_pattern


def dominant_mode(values, grid: Grid) -> float:
    """Wavenumber of the largest cosine coefficient (mean removed).

    Nodal data on a Neumann interval expand in cos(j pi x / length); a DCT-I
    gives those coefficients exactly, including half-integer wavenumbers on
    (0, 2 pi) that an FFT would smear.
    """
    v = np.asarray(values, dtype=float)
    if v.shape != (grid.n_nodes,):
        raise ParameterError(f"expected {grid.n_nodes} nodal values, got {v.shape}")
    c = np.abs(dct(v - v.mean(), type=1))
    c[0] = 0.0
    j = int(np.argmax(c))
    return j * math.pi / (grid.x_max - grid.x_min)


def aligned_mse(state: Field, result: WnlResult, grid: Grid) -> tuple[float, int]:
    """Mean square nodal error over both fields, minimized over the two pattern branches.

    Returns ``(mse, sign)`` with ``sign`` the branch of the first harmonic used.
    """
    best = (math.inf, 1)
    for sign in (1, -1):
        L, K = assemble_pattern(result, grid.x, sign)
        d = np.concatenate([state.L - L, state.K - K])
        mse = float(np.mean(d * d))
        if mse < best[0]:
            best = (mse, sign)
    return best


def relative_rms(state: Field, result: WnlResult, grid: Grid, sign: int) -> float:
    """RMS labor error divided by the FEM half-amplitude of L (diagnostic only)."""
    L, _ = assemble_pattern(result, grid.x, sign)
    half = 0.5 * float(state.L.max() - state.L.min())
    if half == 0:
        return math.inf
    return math.sqrt(float(np.mean((state.L - L) ** 2))) / half


def pattern_amplitude(state: Field) -> float:
    """Half peak-to-peak of the labor profile."""
    return 0.5 * float(state.L.max() - state.L.min())
