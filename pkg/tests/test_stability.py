import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq, minimize_scalar

from labcap.errors import ParameterError
from labcap.model import ScaledModelParams, equilibrium
from labcap.stability import (
    build_matrices,
    critical_threshold,
    dispersion,
    h_poly,
    modes_in_band,
    reaction_ode_integrate,
    sufficient_conditions,
    unstable_band,
)

EXP1 = ScaledModelParams(alpha1=0.5, alpha2=0.15, beta1=2.35, beta2=2.47, c1=0.01, c2=0.01,
                         a1=0.3, a2=3e-4, b=0.0, K_s=1.774)


def _min_det(p, eq, b):
    m = build_matrices(p, eq, b)

    def f(k):
        A = p.gamma * m.R[None] - np.square(k)[:, None, None] * m.Q[None]
        return np.linalg.det(A)

    ks = np.linspace(0, 50, 5001)
    k0 = ks[np.argmin(f(ks))]
    res = minimize_scalar(lambda k: f(np.array([k]))[0], bounds=(max(k0 - 0.02, 0.0), k0 + 0.02),
                          method="bounded", options=dict(xatol=1e-10))
    return res.fun, res.x


def brute_force_threshold(p, eq):
    """Smallest b where min_k det(A_k) touches zero, by root finding."""
    hi = 1.0
    while _min_det(p, eq, hi)[0] > 0:
        hi *= 2
    b = brentq(lambda b: _min_det(p, eq, b)[0], 0.0, hi, xtol=1e-12)
    return b, _min_det(p, eq, b)[1]


class TestThreshold:
    def test_hand_values(self):
        eq = equilibrium(EXP1)
        rep = critical_threshold(EXP1, eq)
        assert rep.b_c == pytest.approx(1.5605, abs=5e-4)
        assert rep.k_c == pytest.approx(4.00, abs=5e-3)

    @pytest.mark.parametrize("gamma", [1.0, 5.0])
    def test_brute_force_oracle(self, gamma):
        p = ScaledModelParams(**{**EXP1.__dict__, "gamma": gamma})
        eq = equilibrium(p)
        rep = critical_threshold(p, eq)
        b_bf, k_bf = brute_force_threshold(p, eq)
        assert rep.b_c == pytest.approx(b_bf, rel=1e-6)
        assert rep.k_c == pytest.approx(k_bf, rel=1e-3)

    def test_classification(self):
        eq = equilibrium(EXP1)
        b_c = critical_threshold(EXP1, eq).b_c
        assert not critical_threshold(EXP1, eq, 0.99 * b_c).is_turing_unstable
        rep = critical_threshold(EXP1, eq, 1.01 * b_c)
        assert rep.is_turing_unstable and rep.necessary_condition
        assert rep.admissible_modes == [4.0]

    def test_degenerate_equilibrium(self):
        from labcap.model import Equilibrium

        with pytest.raises(ParameterError):
            critical_threshold(EXP1, Equilibrium(0.0, 1.0))


class TestBand:
    def test_roots_of_h(self):
        eq = equilibrium(EXP1)
        b = 1.2 * critical_threshold(EXP1, eq).b_c
        s1, s2 = unstable_band(EXP1, eq, b)
        scale = abs(h_poly(EXP1, eq, b, 0.0))
        assert abs(h_poly(EXP1, eq, b, s1)) < 1e-10 * scale
        assert abs(h_poly(EXP1, eq, b, s2)) < 1e-10 * scale
        assert h_poly(EXP1, eq, b, 0.5 * (s1 + s2)) < 0

    def test_h_equals_det(self):
        eq = equilibrium(EXP1)
        k = np.linspace(0, 10, 17)
        curve = dispersion(EXP1, eq, 1.7, k)
        np.testing.assert_allclose(curve.det, h_poly(EXP1, eq, 1.7, k**2), rtol=1e-10, atol=1e-14)

    def test_no_band_below(self):
        eq = equilibrium(EXP1)
        assert unstable_band(EXP1, eq, 0.0) is None
        assert unstable_band(EXP1, eq, 0.9 * critical_threshold(EXP1, eq).b_c) is None

    def test_tangency(self):
        eq = equilibrium(EXP1)
        rep = critical_threshold(EXP1, eq)
        s1, s2 = unstable_band(EXP1, eq, rep.b_c, rtol=1e-9)
        assert s1 == pytest.approx(rep.k_c**2, rel=1e-4) and s2 == pytest.approx(rep.k_c**2, rel=1e-4)

    def test_modes(self):
        assert modes_in_band((3.0, 7.0)) == [2.0, 2.5]
        assert modes_in_band((4.0, 4.1)) == []
        assert modes_in_band(None) == []


class TestDispersion:
    def test_growth_only_inside_band(self):
        eq = equilibrium(EXP1)
        b = 1.1 * critical_threshold(EXP1, eq).b_c
        s1, s2 = unstable_band(EXP1, eq, b)
        curve = dispersion(EXP1, eq, b)
        inside = (curve.k**2 > s1) & (curve.k**2 < s2)
        assert np.all(curve.max_growth[inside] > 0)
        assert np.all(curve.max_growth[~inside] <= 1e-12)

    def test_csv(self, tmp_path):
        eq = equilibrium(EXP1)
        path = tmp_path / "d.csv"
        dispersion(EXP1, eq, 0.0, np.linspace(0, 1, 5)).to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "k,detAk,reLambda1,reLambda2" and len(lines) == 6

    def test_negative_k_rejected(self):
        with pytest.raises(ParameterError):
            dispersion(EXP1, equilibrium(EXP1), 0.0, [-1.0])


scaled = st.builds(
    dict,
    alpha1=st.floats(0.01, 2), alpha2=st.floats(0.01, 2),
    beta1=st.floats(0.05, 20), beta2=st.floats(0.05, 60),
    c1=st.floats(1e-3, 1), c2=st.floats(1e-3, 1),
    a1=st.floats(0, 5), a2_frac=st.floats(0, 0.9),
    b=st.floats(0, 300), gamma=st.floats(0.1, 20),
)


def _build(kw):
    """K_s = 10 K*, and a2 a fraction of the largest value keeping c2 - a2 g > 0."""
    kw = dict(kw)
    frac = kw.pop("a2_frac")
    eq = equilibrium(ScaledModelParams(**kw, a2=0.0, K_s=1.0))
    K_s = 10 * eq.K_star
    return ScaledModelParams(**kw, a2=frac * 2 * K_s * kw["c2"], K_s=K_s), eq


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(scaled)
    def test_det_A0_positive_trace_negative(self, kw):
        assume(kw["beta1"] * kw["beta2"] > 1.05)
        p, eq = _build(kw)
        k = np.linspace(0, 50, 201)
        curve = dispersion(p, eq, p.b, k)
        assert curve.det[0] > 0
        assert np.all(curve.trace < 0)

    @settings(max_examples=300, deadline=None)
    @given(scaled)
    def test_sufficient_conditions_imply_instability(self, kw):
        assume(kw["beta1"] * kw["beta2"] > 1.05)
        kw["alpha2"] = kw["alpha1"]
        p, eq = _build(kw)
        bif, bif2 = sufficient_conditions(p, eq)
        rep = critical_threshold(p, eq)
        if bif2:
            assert bif
        if bif:
            assert p.b > rep.b_c


class TestReactionOde:
    @pytest.mark.parametrize("sign", [(1, 1), (1, -1), (-1, 1), (-1, -1)])
    def test_converges_from_ten_percent(self, sign):
        eq = equilibrium(EXP1)
        start = (eq.L_star * (1 + 0.1 * sign[0]), eq.K_star * (1 + 0.1 * sign[1]))
        tr = reaction_ode_integrate(EXP1, start, t_end=200.0, dt=0.05, record_every=100)
        assert (tr.L[-1], tr.K[-1]) == pytest.approx((eq.L_star, eq.K_star), rel=1e-8)

    def test_rk4_fourth_order(self):
        eq = equilibrium(EXP1)
        start = (0.4, 0.1)
        ref = reaction_ode_integrate(EXP1, start, 2.0, dt=1e-3)
        errs = [abs(reaction_ode_integrate(EXP1, start, 2.0, dt=d).L[-1] - ref.L[-1]) for d in (0.2, 0.1)]
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.2)
        assert eq is not None

    def test_negative_start_rejected(self):
        with pytest.raises(ParameterError):
            reaction_ode_integrate(EXP1, (-0.1, 0.2), 1.0)
