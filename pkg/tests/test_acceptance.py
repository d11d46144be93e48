"""Acceptance gate: one PASS/FAIL line per criterion, printed in the terminal summary.

Criteria that fail here are known disagreements with the reference table and
are left red on purpose; see the README for the analysis.
"""

import filecmp
import math
import time

import numpy as np
import pytest

from labcap import fem
from labcap.ces import CesParams, FactorPrices, derive_lv, marginal_products, profits_hessian
from labcap.errors import ParameterError
from labcap.harness import PRESETS, REFERENCE_TABLE, analyze, preset, run_experiment
from labcap.harness.experiment import check_against_reference, table_row
from labcap.model import ScaledModelParams, equilibrium
from labcap.stability import critical_threshold, dispersion, reaction_ode_integrate

SUPERCRITICAL = ["exp1", "exp2", "exp3"]


def _record(log, n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    log.append(line)
    print(line)
    return ok


def test_criterion_1_table_reproduction(acceptance_log):
    t0 = time.perf_counter()
    rows = [table_row(PRESETS[n]) for n in PRESETS]
    elapsed = time.perf_counter() - t0
    failures = [f"{r['name']}.{c}={r[c]:.4g} (ref {REFERENCE_TABLE[r['name']][c]})"
                for r in rows for c, ok in check_against_reference(r).items() if not ok]
    # hand evaluation with the rounded coefficients of row 1
    p = ScaledModelParams(alpha1=0.5, alpha2=0.15, beta1=2.35, beta2=2.47, c1=0.01, c2=0.01,
                          a1=0.3, a2=3e-4, b=0.0, K_s=1.774)
    eq = equilibrium(p)
    rep = critical_threshold(p, eq)
    hand_ok = (abs(eq.L_star - 0.2883) < 1e-4 and abs(eq.K_star - 0.1774) < 1e-4
               and abs(rep.b_c - 1.5605) < 5e-4 and abs(rep.k_c - 4.00) < 5e-3)
    ok = not failures and hand_ok and elapsed < 1.0 and all(r["status"] == "ok" for r in rows)
    detail = f"{elapsed:.3f}s, hand check {'ok' if hand_ok else 'off'}"
    if failures:
        detail += "; mismatches: " + ", ".join(failures)
    assert _record(acceptance_log, 1, ok, detail)


def test_criterion_2_regime(acceptance_log):
    t0 = time.perf_counter()
    res = {n: analyze(preset(n)).wnl for n in PRESETS}
    elapsed = time.perf_counter() - t0
    want = {"exp1": 1, "exp2": 1, "exp3": 1, "exp4": -1}
    parts, ok = [], elapsed < 1.0
    for n, r in res.items():
        good = r.sigma > 0 and np.sign(r.ell) == want[n]
        ok &= bool(good)
        note = "" if good else f" (expected ell {'<' if want[n] < 0 else '>'} 0)"
        parts.append(f"{n} sigma={r.sigma:.4g} ell={r.ell:.4g}{note}")
    assert _record(acceptance_log, 2, ok, f"{elapsed:.3f}s; " + "; ".join(parts))


def test_criterion_3_fem_wnl_agreement(acceptance_log, fem_runs):
    parts, ok = [], True
    for n in SUPERCRITICAL:
        rep = fem_runs.get(n)[2]
        ref = float(REFERENCE_TABLE[n]["mse"])
        good = 0.5 <= rep.mse / ref <= 2.0
        ok &= good
        parts.append(f"{n} mse={rep.mse:.3g} (ref {ref:g}, rel.rms {rep.relative_rms:.2g})")
    total = sum(fem_runs.elapsed[n] for n in SUPERCRITICAL)
    ok &= total <= 600
    assert _record(acceptance_log, 3, ok, f"{total:.0f}s; " + "; ".join(parts))


def test_criterion_4_steady_time(acceptance_log, fem_runs):
    parts, ok = [], True
    for n in ("exp1", "exp2"):
        rep = fem_runs.get(n)[2]
        ref = float(REFERENCE_TABLE[n]["T_s"])
        good = rep.converged and abs(rep.T_s - ref) <= 0.25 * ref
        ok &= bool(good)
        parts.append(f"{n} T_s={rep.T_s:g} (ref {ref:g}, {100 * (rep.T_s / ref - 1):+.0f}%)")
    assert _record(acceptance_log, 4, ok, "; ".join(parts))


def test_criterion_5_dominant_mode(acceptance_log, fem_runs):
    parts, ok = [], True
    for n in SUPERCRITICAL:
        rep = fem_runs.get(n)[2]
        good = rep.converged and rep.dominant_mode == rep.k_bar_c
        ok &= bool(good)
        parts.append(f"{n} mode={rep.dominant_mode:g} k_bar_c={rep.k_bar_c:g}")
    assert _record(acceptance_log, 5, ok, "; ".join(parts))


def _signs_on_random_draws(n_draws=1000):
    rng = np.random.default_rng(20240601)
    checked = 0
    while checked < n_draws:
        eps = rng.uniform(0.05, 0.95)
        eta = rng.uniform(-3.0, eps - 1e-3)
        if abs(eta) < 1e-3:
            continue
        p = CesParams(rng.uniform(0.5, 50), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), eps, eta)
        f = FactorPrices(rng.uniform(0.1, 5), rng.uniform(0.1, 5))
        try:
            lv = derive_lv(p, f, "exact")
        except ParameterError:
            continue
        if lv.sign_violations():
            return False, checked
        checked += 1
    return True, checked


def _fd(fun, K, L, h=1e-6):
    """Centered differences (d/dL, d/dK) of a scalar or vector function."""
    dL = (np.asarray(fun(K, L * (1 + h))) - np.asarray(fun(K, L * (1 - h)))) / (2 * h * L)
    dK = (np.asarray(fun(K * (1 + h), L)) - np.asarray(fun(K * (1 - h), L))) / (2 * h * K)
    return dL, dK


def _finite_differences():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        eps = rng.uniform(0.1, 0.9)
        eta = rng.uniform(-1.0, -0.05) if rng.random() < 0.5 else rng.uniform(0.05, eps)
        p = CesParams(rng.uniform(0.5, 5), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), eps, eta)
        K, L = rng.uniform(0.2, 3.0, 2)
        Y = lambda k, l: p.A * (p.alpha * k**p.eta + p.beta * l**p.eta) ** (p.epsilon / p.eta)
        grad = np.array(marginal_products(p, K, L))
        worst = max(worst, float(np.max(np.abs(grad - np.array(_fd(Y, K, L))) / np.abs(grad))))
        dL, dK = _fd(lambda k, l: marginal_products(p, k, l), K, L)
        fdH = np.column_stack([dL, dK])  # rows: (Y_L, Y_K); columns: d/dL, d/dK
        H = profits_hessian(p, K, L)
        worst = max(worst, float(np.max(np.abs(H - fdH) / np.abs(H))))
    return worst < 1e-5, worst


def _sub_threshold():
    worst = 0.0
    for n in SUPERCRITICAL:
        a = analyze(preset(n))
        p = a.params.with_b(0.99 * a.stability.b_c)
        grid = fem.Grid(256)
        tr = fem.run_to_steady(fem.initial_condition(a.eq, grid), p, fem.SolverConfig(tol_s=1e-11), grid)
        if not tr.converged:
            return False, math.inf
        worst = max(worst, np.abs(tr.final.L - a.eq.L_star).max(), np.abs(tr.final.K - a.eq.K_star).max())
    return worst < 1e-4, worst


def _heat_limit():
    grid = fem.Grid(256)
    p = ScaledModelParams(alpha1=0.0, alpha2=0.0, beta1=0.0, beta2=0.0, c1=1.0, c2=1.0,
                          a1=0.0, a2=0.0, b=0.0, K_s=1.0, gamma=0.0)
    cfg = fem.SolverConfig()
    one, c = np.ones(256), np.cos(grid.x)
    rng = np.random.default_rng(3)
    s = fem.Field(1 + 0.1 * rng.standard_normal(256), 1 + c)
    stepper = fem.Stepper(p, grid, cfg)
    drift = 0.0
    for _ in range(10):
        new, _ = stepper.step(s)
        drift = max(drift, abs(fem.lumped_inner_product(new.L - s.L, one, grid)))
        s = new
    s = fem.Field(c.copy(), c.copy())
    new, _ = stepper.step(s)
    factor = fem.lumped_inner_product(new.L, c, grid) / fem.lumped_inner_product(c, c, grid)
    decay_err = abs(factor - math.exp(-cfg.tau))
    return drift < 1e-12 and decay_err < cfg.tau * (cfg.tau + grid.h**2), (drift, decay_err)


def _reaction_ode():
    worst = 0.0
    for n in PRESETS:
        a = analyze(preset(n))
        for sL in (-1, 1):
            for sK in (-1, 1):
                start = (a.eq.L_star * (1 + 0.1 * sL), a.eq.K_star * (1 + 0.1 * sK))
                tr = reaction_ode_integrate(a.params, start, t_end=400.0, dt=0.02, record_every=1000)
                worst = max(worst, abs(tr.L[-1] / a.eq.L_star - 1), abs(tr.K[-1] / a.eq.K_star - 1))
    return worst < 1e-6, worst


def _det_trace():
    ok = True
    for n in PRESETS:
        a = analyze(preset(n))
        for b in (0.0, a.stability.b_c, a.params.b, 3 * a.params.b):
            curve = dispersion(a.params, a.eq, b, np.linspace(0, 60, 4001))
            ok &= bool(curve.det[0] > 0 and np.all(curve.trace < 0))
    return ok, None


def test_criterion_6_property_suites(acceptance_log):
    checks = {
        "signs": _signs_on_random_draws(),
        "finite-differences": _finite_differences(),
        "sub-threshold": _sub_threshold(),
        "heat-limit": _heat_limit(),
        "reaction-ode": _reaction_ode(),
        "det/trace": _det_trace(),
    }
    ok = all(v[0] for v in checks.values())
    detail = "; ".join(f"{k} {'ok' if v[0] else 'FAILED'}" + (f" ({v[1]:.2g})" if isinstance(v[1], float) else "")
                       for k, v in checks.items())
    assert _record(acceptance_log, 6, ok, detail)


def test_criterion_7_determinism(acceptance_log, tmp_path):
    mismatched = []
    for n in PRESETS:
        cfg = preset(n).with_value("solver.max_steps", 200)
        _, first = run_experiment(cfg, out_dir=tmp_path / "a")
        _, second = run_experiment(cfg, out_dir=tmp_path / "b")
        for key in first:
            if not filecmp.cmp(first[key], second[key], shallow=False):
                mismatched.append(f"{n}/{key}")
    ok = not mismatched
    assert _record(acceptance_log, 7, ok, "all artifacts bitwise identical" if ok else f"differ: {mismatched}")


@pytest.mark.parametrize("name", SUPERCRITICAL)
def test_steady_patterns_are_nonuniform(name, fem_runs):
    a, traj, _ = fem_runs.get(name)
    assert traj.final.L.max() - traj.final.L.min() > 0.1 * a.eq.L_star
    assert traj.fp_iterations_max <= 10
