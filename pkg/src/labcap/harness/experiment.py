"""Pipeline orchestration: CES -> rescale -> stability -> WNL -> FEM -> comparison."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import ces, fem, model, stability, wnl
from ..errors import LabcapError, ParameterError, StageError
from . import compare
from .config import ExperimentConfig, to_ini_string
from .presets import REFERENCE_TABLE

log = logging.getLogger(__name__)

OUTPUT_ENV = "LABCAP_OUTPUT_DIR"


def output_root(override=None) -> Path:
    if override is not None:
        return Path(override)
    return Path(os.environ.get(OUTPUT_ENV, "labcap_output"))


@dataclass
class Analysis:
    """Everything the pipeline knows before time stepping."""

    cfg: ExperimentConfig
    lv: ces.LotkaVolterraCoeffs
    params: model.ScaledModelParams
    eq: model.Equilibrium
    stability: stability.StabilityReport
    wnl: wnl.WnlResult | None

    @property
    def regime(self) -> str:
        if not self.params.b > self.stability.b_c:
            return "stable"
        return self.wnl.regime


@dataclass
class ComparisonReport:
    name: str
    regime: str
    b: float
    b_c: float
    k_c: float
    k_bar_c: float
    sigma: float | None = None
    ell: float | None = None
    amplitude_wnl: float | None = None
    mse: float | None = None
    relative_rms: float | None = None
    branch: int | None = None
    dominant_mode: float | None = None
    amplitude_fem: float | None = None
    T_s: float | None = None
    converged: bool | None = None
    steps: int | None = None
    fp_iterations_max: int | None = None
    fp_iterations_mean: float | None = None
    negative_at: float | None = None
    warnings: list = field(default_factory=list)


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except LabcapError as e:
        raise StageError(name, e) from e
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as e:
        raise StageError(name, e) from e


def _build_params(cfg: ExperimentConfig, lv):
    d = cfg.diffusion
    if d.kind == "raw":
        raw = model.RawDiffusion(c1=d.c1, c2=d.c2, a11=d.a1, a12=0.0, a22=d.a2, K_s=d.K_s)
        p = model.rescale(lv, raw, cfg.gamma)
    else:
        p = model.scaled_params(lv, d.c1, d.c2, d.a1, d.a2, gamma=cfg.gamma, K_s=d.K_s)
    p.check_assumptions()
    return p, model.equilibrium(p)


def analyze(cfg: ExperimentConfig) -> Analysis:
    """Run the analytic stages; b is set to b_multiplier times the b_c found here."""
    lv = _stage("ces", ces.derive_lv, cfg.ces, cfg.prices, cfg.convention)
    p0, eq = _stage("model", _build_params, cfg, lv)
    crit = _stage("stability", stability.critical_threshold, p0, eq)
    p = p0.with_b(cfg.b_multiplier * crit.b_c)
    rep = _stage("stability", stability.critical_threshold, p, eq)
    res = None
    if p.b > rep.b_c:
        res = _stage("wnl", wnl.analyze, p, eq)
    return Analysis(cfg, lv, p, eq, rep, res)


def _base_report(a: Analysis) -> ComparisonReport:
    r = ComparisonReport(
        name=a.cfg.name,
        regime=a.regime,
        b=a.params.b,
        b_c=a.stability.b_c,
        k_c=a.stability.k_c,
        k_bar_c=wnl.critical_mode_bar(a.stability.k_c),
    )
    if a.wnl is not None:
        r.sigma, r.ell = a.wnl.sigma, a.wnl.ell
    return r


def simulate(a: Analysis, progress=None) -> fem.Trajectory:
    grid = fem.Grid(a.cfg.n_nodes)
    state0 = fem.initial_condition(a.eq, grid, a.cfg.ic_amplitude)
    return _stage("fem", fem.run_to_steady, state0, a.params, a.cfg.solver, grid, progress)


def compare_results(a: Analysis, traj: fem.Trajectory) -> ComparisonReport:
    r = _base_report(a)
    grid, final = traj.grid, traj.final
    r.T_s = traj.T_s
    r.converged = traj.converged
    r.steps = traj.steps
    r.fp_iterations_max = traj.fp_iterations_max
    r.fp_iterations_mean = traj.fp_iterations_mean
    r.negative_at = traj.negative_at
    r.warnings = list(traj.warnings)
    r.dominant_mode = compare.dominant_mode(final.L, grid)
    r.amplitude_fem = compare.pattern_amplitude(final)
    if r.regime == "supercritical":
        r.mse, r.branch = compare.aligned_mse(final, a.wnl, grid)
        r.relative_rms = compare.relative_rms(final, a.wnl, grid, r.branch)
        r.amplitude_wnl = compare.pattern_amplitude(fem.Field(*wnl.assemble_pattern(a.wnl, grid.x, r.branch)))
    return r


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _finite_or_none(v):
    return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else v


def write_artifacts(a: Analysis, traj: fem.Trajectory, report: ComparisonReport, out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = traj.grid
    paths = {
        "config": out_dir / "config.ini",
        "steady": out_dir / "steady.csv",
        "history": out_dir / "history.csv",
        "dispersion": out_dir / "dispersion.csv",
        "metadata": out_dir / "metadata.json",
    }
    paths["config"].write_text(to_ini_string(a.cfg))
    fem.write_profile_csv(paths["steady"], grid, traj.final)
    with open(paths["history"], "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["t", "L_min", "L_max", "K_min", "K_max"])
        for t, s in traj.snapshots:
            wr.writerow([repr(float(v)) for v in (t, s.L.min(), s.L.max(), s.K.min(), s.K.max())])
    stability.dispersion(a.params, a.eq).to_csv(paths["dispersion"])
    if report.regime == "supercritical":
        paths["wnl"] = out_dir / "wnl.csv"
        L, K = wnl.assemble_pattern(a.wnl, grid.x, report.branch or 1)
        fem.write_profile_csv(paths["wnl"], grid, fem.Field(L, K))
    meta = {
        "report": {k: _finite_or_none(v) for k, v in asdict(report).items()},
        "parameters": asdict(a.params),
        "equilibrium": asdict(a.eq),
        "lotka_volterra": asdict(a.lv),
        "config": a.cfg.to_dict(),
        "grid": {"n_nodes": grid.n_nodes, "h": grid.h},
    }
    _write_json(paths["metadata"], meta)
    return {k: str(v) for k, v in paths.items()}


def run_experiment(cfg: ExperimentConfig, out_dir=None, write: bool = True, progress=None):
    """Full pipeline. Returns ``(ComparisonReport, artifact paths)``."""
    a = analyze(cfg)
    log.info("%s: b_c=%.6g k_c=%.6g b=%.6g regime=%s", cfg.name, a.stability.b_c, a.stability.k_c,
             a.params.b, a.regime)
    traj = simulate(a, progress)
    report = compare_results(a, traj)
    artifacts = {}
    if write:
        artifacts = write_artifacts(a, traj, report, output_root(out_dir) / cfg.name)
    return report, artifacts


# ---------------------------------------------------------------- reference-table checks

_NUM = re.compile(r"^(-?\d+)(?:\.(\d+))?(?:e(-?\d+))?$")


def printed_unit(printed: str) -> float:
    """One unit in the last displayed digit of a printed number."""
    m = _NUM.match(printed.strip())
    if not m:
        raise ParameterError(f"cannot parse printed value {printed!r}")
    decimals = len(m.group(2) or "")
    exp = int(m.group(3) or 0)
    return 10.0 ** (exp - decimals)


def matches_printed(value: float, printed: str) -> bool:
    """|value - printed| within one unit of the last displayed digit.

    The table mixes rounding and truncation (e.g. 2.356 shown as 2.35,
    0.2871 shown as 0.29), so half a unit would reject correct values.
    """
    unit = printed_unit(printed)
    return abs(value - float(printed)) <= unit * (1 + 1e-9)


COEFF_COLUMNS = ("alpha1", "alpha2", "beta1", "beta2", "L_star", "K_star", "b_c", "k_c")
T_S_RTOL = 0.25
MSE_FACTOR = 2.0


def check_against_reference(row: dict) -> dict:
    """Per-column pass/fail against the printed table; missing references are skipped."""
    ref = REFERENCE_TABLE.get(row["name"])
    out = {}
    if ref is None:
        return out
    for col in COEFF_COLUMNS:
        if row.get(col) is not None:
            out[col] = bool(matches_printed(row[col], ref[col]))
    if row.get("T_s") is not None and ref.get("T_s") and row.get("converged"):
        out["T_s"] = bool(abs(row["T_s"] - float(ref["T_s"])) <= T_S_RTOL * float(ref["T_s"]))
    if row.get("mse") is not None and ref.get("mse"):
        ratio = row["mse"] / float(ref["mse"])
        out["mse"] = bool(1.0 / MSE_FACTOR <= ratio <= MSE_FACTOR)
    return out


def _analysis_row(a: Analysis) -> dict:
    p, eq, s = a.params, a.eq, a.stability
    row = dict(
        alpha1=p.alpha1, alpha2=p.alpha2, beta1=p.beta1, beta2=p.beta2,
        L_star=eq.L_star, K_star=eq.K_star, b_c=s.b_c, k_c=s.k_c,
        k_bar_c=wnl.critical_mode_bar(s.k_c), b=p.b,
        sigma=None if a.wnl is None else a.wnl.sigma,
        ell=None if a.wnl is None else a.wnl.ell,
    )
    row = {k: None if v is None else float(v) for k, v in row.items()}
    row["regime"] = a.regime
    return row


def table_row(cfg: ExperimentConfig, run_fem: bool = False) -> dict:
    row = {"name": cfg.name, "status": "ok", "error": None}
    try:
        a = analyze(cfg)
        row.update(_analysis_row(a))
        if run_fem:
            rep = compare_results(a, simulate(a))
            row.update(T_s=rep.T_s, converged=rep.converged, mse=rep.mse, dominant_mode=rep.dominant_mode)
    except Exception as e:  # per-row isolation
        row.update(status="failed", error=str(e) if isinstance(e, StageError) else f"{type(e).__name__}: {e}")
        return row
    ref = REFERENCE_TABLE.get(cfg.name)
    if ref is not None:
        for col, printed in ref.items():
            if printed is None:
                continue
            row[f"ref_{col}"] = float(printed)
            if row.get(col) is not None and float(printed) != 0:
                row[f"reldev_{col}"] = (row[col] - float(printed)) / float(printed)
        row["checks"] = check_against_reference(row)
    return row


def table1(cfgs, run_fem: bool = False, out_dir=None, write: bool = True) -> list[dict]:
    """Derived table columns next to the printed values; failures are isolated per row."""
    rows = [table_row(c, run_fem) for c in cfgs]
    if write:
        root = output_root(out_dir)
        root.mkdir(parents=True, exist_ok=True)
        _write_json(root / "table1.json", rows)
        _write_rows_csv(root / "table1.csv", rows)
    return rows


def _write_rows_csv(path: Path, rows: list[dict]):
    cols = []
    for r in rows:
        for k in r:
            if k != "checks" and k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        wr = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        wr.writeheader()
        for r in rows:
            wr.writerow({k: ("" if r.get(k) is None else r[k]) for k in cols})


def dispersion_dump(cfg: ExperimentConfig, b_values=None, out_dir=None, k_grid=None) -> list[str]:
    """One dispersion CSV per b; default b in {b_c, b_multiplier * b_c}."""
    lv = _stage("ces", ces.derive_lv, cfg.ces, cfg.prices, cfg.convention)
    p, eq = _stage("model", _build_params, cfg, lv)
    b_c = stability.critical_threshold(p, eq).b_c
    if b_values is None:
        b_values = [b_c, cfg.b_multiplier * b_c]
    if k_grid is None:
        k_grid = np.linspace(0.0, 3.0 * stability.critical_wavenumber(p, eq), 2048)
    root = output_root(out_dir) / cfg.name
    root.mkdir(parents=True, exist_ok=True)
    paths = []
    for b in b_values:
        if not (math.isfinite(b) and b >= 0):
            raise ParameterError(f"b must be finite and non-negative, got {b}")
        path = root / f"dispersion_b{b:.6g}.csv"
        stability.dispersion(p, eq, b, k_grid).to_csv(path)
        paths.append(str(path))
    return paths


def parse_range(spec: str) -> np.ndarray:
    """``a:b:n`` -> n evenly spaced values from a to b inclusive."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise ParameterError(f"range must be a:b:n, got {spec!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise ParameterError(f"bad range {spec!r}: {e}") from e
    if n < 1:
        raise ParameterError("range needs n >= 1")
    return np.linspace(a, b, n)


def _sweep_point(args):
    cfg, param, value, run_fem = args
    try:
        c = cfg.with_value(param, value)
    except ParameterError as e:
        return {"value": value, "status": "failed", "error": str(e)}
    row = table_row(c, run_fem)
    row["value"] = value
    return row


def sweep(cfg: ExperimentConfig, param: str, values, run_fem: bool = False, workers: int = 1,
          out_dir=None, write: bool = True) -> list[dict]:
    cfg.with_value(param, float(values[0]))  # fail fast on unknown names
    jobs = [(cfg, param, float(v), run_fem) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    for r in rows:
        r.pop("checks", None)
        r["param"] = param
    if write:
        root = output_root(out_dir) / cfg.name
        root.mkdir(parents=True, exist_ok=True)
        stem = f"sweep_{param.replace('.', '_')}"
        _write_rows_csv(root / f"{stem}.csv", rows)
        _write_json(root / f"{stem}.json", rows)
    return rows
