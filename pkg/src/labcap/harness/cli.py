"""Command-line front end. All work is delegated to :mod:`.experiment`."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import ParameterError, StageError
from . import experiment
from .config import load
from .presets import PRESETS, preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_COMPARISON = 4


def _resolve(target: str):
    if target in PRESETS:
        return preset(target)
    if Path(target).exists():
        return load(target)
    raise ParameterError(f"{target!r} is neither a preset ({', '.join(PRESETS)}) nor a config file")


def _with_overrides(cfg, args):
    if getattr(args, "max_steps", None):
        cfg = cfg.with_value("solver.max_steps", args.max_steps)
    return cfg


def _fmt(v):
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def cmd_run(args) -> int:
    cfg = _with_overrides(_resolve(args.target), args)
    report, artifacts = experiment.run_experiment(cfg, out_dir=args.out)
    for k in ("regime", "b_c", "k_c", "k_bar_c", "b", "sigma", "ell", "T_s", "converged", "steps",
              "fp_iterations_max", "dominant_mode", "amplitude_fem", "amplitude_wnl", "mse"):
        print(f"{k:>18}: {_fmt(getattr(report, k))}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"artifacts in {Path(artifacts['metadata']).parent}")
    if args.check:
        row = {"name": cfg.name, "b_c": report.b_c, "k_c": report.k_c, "T_s": report.T_s,
               "converged": report.converged, "mse": report.mse}
        return _report_checks([row])
    return EXIT_OK


def _report_checks(rows) -> int:
    failed = False
    for row in rows:
        for col, ok in experiment.check_against_reference(row).items():
            print(f"{'PASS' if ok else 'FAIL'} {row['name']} {col}")
            failed |= not ok
    return EXIT_COMPARISON if failed else EXIT_OK


COLUMNS = ("alpha1", "alpha2", "beta1", "beta2", "L_star", "K_star", "b_c", "k_c", "regime", "T_s", "mse")


def cmd_table1(args) -> int:
    names = args.presets or list(PRESETS)
    cfgs = [_with_overrides(_resolve(n), args) for n in names]
    rows = experiment.table1(cfgs, run_fem=args.fem, out_dir=args.out)
    cols = [c for c in COLUMNS if args.fem or c not in ("T_s", "mse")]
    print("name   " + " ".join(f"{c:>10}" for c in cols))
    for r in rows:
        if r["status"] != "ok":
            print(f"{r['name']:<6} FAILED {r['error']}")
            continue
        print(f"{r['name']:<6} " + " ".join(f"{_fmt(r.get(c)):>10}" for c in cols))
        if any(f"ref_{c}" in r for c in cols):
            print("  ref  " + " ".join(f"{_fmt(r.get('ref_' + c)):>10}" for c in cols))
    print(f"written to {experiment.output_root(args.out)}")
    if any(r["status"] != "ok" for r in rows):
        return EXIT_STAGE
    if args.check:
        return _report_checks(rows)
    return EXIT_OK


def cmd_dispersion(args) -> int:
    cfg = _resolve(args.target)
    paths = experiment.dispersion_dump(cfg, b_values=args.b, out_dir=args.out)
    print("\n".join(paths))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _with_overrides(_resolve(args.config), args)
    values = experiment.parse_range(args.range)
    rows = experiment.sweep(cfg, args.param, values, run_fem=args.fem, workers=args.workers, out_dir=args.out)
    cols = ("b_c", "k_c", "sigma", "ell", "regime") + (("T_s", "mse") if args.fem else ())
    print(f"{args.param:>14} " + " ".join(f"{c:>12}" for c in cols))
    for r in rows:
        if r.get("status") != "ok":
            print(f"{r['value']:>14.6g} FAILED {r.get('error')}")
        else:
            print(f"{r['value']:>14.6g} " + " ".join(f"{_fmt(r.get(c)):>12}" for c in cols))
    return EXIT_OK if all(r.get("status") == "ok" for r in rows) else EXIT_STAGE


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="labcap", description="Labor/capital cross-diffusion pattern lab")
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("--out", help=f"output directory (default ${experiment.OUTPUT_ENV} or ./labcap_output)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline for a preset or INI config")
    p.add_argument("target")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--check", action="store_true", help="compare with the reference table")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table1", help="derived coefficient table for the presets")
    p.add_argument("presets", nargs="*")
    p.add_argument("--fem", action="store_true", help="also time-step (adds T_s and MSE)")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--check", action="store_true")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("dispersion", help="det(A_k) and growth rates as CSV")
    p.add_argument("target")
    p.add_argument("--b", type=float, nargs="+")
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("sweep", help="vary one parameter over a range")
    p.add_argument("config")
    p.add_argument("--param", required=True, help="e.g. b_multiplier, gamma, ces.A, diffusion.a1")
    p.add_argument("--range", required=True, help="a:b:n")
    p.add_argument("--fem", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParameterError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as e:
        print(f"stage failure: {e}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
