"""Experiment configuration and its INI file form.

Example file::

    [experiment]
    name = exp1
    gamma = 1
    b_multiplier = 1.01
    convention = published     ; or exact

    [ces]
    A = 1
    alpha = 0.3
    beta = 0.6
    epsilon = 0.5
    eta = 0.2

    [prices]
    w_star = 1
    r_star = 0.3

    [diffusion]
    kind = scaled               ; c1, c2, a1, a2 [, K_s] already rescaled
    c1 = 0.01
    c2 = 0.01
    a1 = 0.3
    a2 = 3e-4

    [solver]                    ; optional, defaults shown by `save`
    tau = 0.01

    [grid]
    n_nodes = 256

With ``kind = raw`` the section holds c1, c2, a11, a22 and K_s in original
units and the rescaling is applied. K_s is optional for scaled input and
defaults to ten times the capital equilibrium.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..ces import CONVENTIONS, CesParams, FactorPrices
from ..errors import ParameterError
from ..fem import SolverConfig


@dataclass(frozen=True)
class DiffusionSpec:
    c1: float
    c2: float
    a1: float
    a2: float
    kind: str = "scaled"
    K_s: float | None = None

    def __post_init__(self):
        if self.kind not in ("scaled", "raw"):
            raise ParameterError(f"diffusion kind must be 'scaled' or 'raw', got {self.kind!r}")
        if self.kind == "raw" and self.K_s is None:
            raise ParameterError("raw diffusion input needs K_s")
        for name in ("c1", "c2", "a1", "a2"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"diffusion {name} must be finite and non-negative, got {v}")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    ces: CesParams
    prices: FactorPrices
    diffusion: DiffusionSpec
    gamma: float = 1.0
    b_multiplier: float = 1.01
    convention: str = "published"
    solver: SolverConfig = field(default_factory=SolverConfig)
    n_nodes: int = 256
    ic_amplitude: float = 0.05

    def __post_init__(self):
        if not self.name or any(c in self.name for c in "/\\"):
            raise ParameterError(f"invalid experiment name {self.name!r}")
        if not self.b_multiplier > 0:
            raise ParameterError(f"b_multiplier must be positive, got {self.b_multiplier}")
        if not self.gamma > 0:
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if self.convention not in CONVENTIONS:
            raise ParameterError(f"convention must be one of {CONVENTIONS}, got {self.convention!r}")
        if self.n_nodes < 3:
            raise ParameterError("n_nodes must be at least 3")

    def with_value(self, name: str, value: float) -> "ExperimentConfig":
        """Copy with one numeric parameter replaced; ``section.key`` or a bare key."""
        section, _, key = name.rpartition(".")
        targets = {
            "ces": ("ces", self.ces),
            "prices": ("prices", self.prices),
            "diffusion": ("diffusion", self.diffusion),
            "solver": ("solver", self.solver),
        }
        if not section and key in {f.name for f in fields(self)}:
            cast = int if key == "n_nodes" else float
            return replace(self, **{key: cast(value)})
        for sec, (attr, obj) in targets.items():
            if section in ("", sec) and key in {f.name for f in fields(obj)}:
                cast = int if key in ("max_fp_iters", "max_steps", "snapshot_every") else float
                return replace(self, **{attr: replace(obj, **{key: cast(value)})})
        raise ParameterError(f"unknown parameter {name!r}")

    def to_dict(self) -> dict:
        return asdict(self)


def _section(cp, name, required=True):
    if not cp.has_section(name):
        if required:
            raise ParameterError(f"missing [{name}] section")
        return {}
    return dict(cp.items(name))


def _floats(d: dict, keys, section):
    out = {}
    for k in keys:
        if k not in d:
            raise ParameterError(f"[{section}] missing key {k!r}")
        try:
            out[k] = float(d[k])
        except ValueError as e:
            raise ParameterError(f"[{section}] {k} = {d[k]!r} is not a number") from e
    return out


def _parser():
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep A, K_s
    return cp


def from_ini_string(text: str) -> ExperimentConfig:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ParameterError(f"malformed config: {e}") from e
    exp = _section(cp, "experiment")
    ces = CesParams(**_floats(_section(cp, "ces"), ("A", "alpha", "beta", "epsilon", "eta"), "ces"))
    prices = FactorPrices(**_floats(_section(cp, "prices"), ("w_star", "r_star"), "prices"))
    dsec = _section(cp, "diffusion")
    kind = dsec.get("kind", "scaled")
    if kind == "raw":
        d = _floats(dsec, ("c1", "c2", "a11", "a22", "K_s"), "diffusion")
        diffusion = DiffusionSpec(d["c1"], d["c2"], d["a11"], d["a22"], "raw", d["K_s"])
    else:
        d = _floats(dsec, ("c1", "c2", "a1", "a2"), "diffusion")
        K_s = _floats(dsec, ("K_s",), "diffusion")["K_s"] if "K_s" in dsec else None
        diffusion = DiffusionSpec(**d, kind=kind, K_s=K_s)
    solver_kw = {}
    for k, v in _section(cp, "solver", required=False).items():
        if k == "norm":
            solver_kw[k] = v
        elif k in ("max_fp_iters", "max_steps", "snapshot_every"):
            solver_kw[k] = int(float(v))
        elif k in ("tau", "tol_fp", "tol_s"):
            solver_kw[k] = float(v)
        else:
            raise ParameterError(f"[solver] unknown key {k!r}")
    grid = _section(cp, "grid", required=False)
    if "name" not in exp:
        raise ParameterError("[experiment] missing key 'name'")
    try:
        return ExperimentConfig(
            name=exp["name"],
            ces=ces,
            prices=prices,
            diffusion=diffusion,
            gamma=float(exp.get("gamma", 1.0)),
            b_multiplier=float(exp.get("b_multiplier", 1.01)),
            convention=exp.get("convention", "published"),
            solver=SolverConfig(**solver_kw),
            n_nodes=int(grid.get("n_nodes", 256)),
            ic_amplitude=float(exp.get("ic_amplitude", 0.05)),
        )
    except (TypeError, ValueError) as e:
        raise ParameterError(str(e)) from e


def load(path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ParameterError(f"config file not found: {p}")
    return from_ini_string(p.read_text())


def _num(v) -> str:
    return repr(float(v))


def to_ini_string(cfg: ExperimentConfig) -> str:
    cp = _parser()
    cp["experiment"] = {
        "name": cfg.name,
        "gamma": _num(cfg.gamma),
        "b_multiplier": _num(cfg.b_multiplier),
        "convention": cfg.convention,
        "ic_amplitude": _num(cfg.ic_amplitude),
    }
    cp["ces"] = {k: _num(v) for k, v in asdict(cfg.ces).items()}
    cp["prices"] = {k: _num(v) for k, v in asdict(cfg.prices).items()}
    d = cfg.diffusion
    if d.kind == "raw":
        cp["diffusion"] = {"kind": "raw", "c1": _num(d.c1), "c2": _num(d.c2),
                           "a11": _num(d.a1), "a22": _num(d.a2), "K_s": _num(d.K_s)}
    else:
        cp["diffusion"] = {"kind": "scaled", "c1": _num(d.c1), "c2": _num(d.c2),
                           "a1": _num(d.a1), "a2": _num(d.a2)}
        if d.K_s is not None:
            cp["diffusion"]["K_s"] = _num(d.K_s)
    cp["solver"] = {k: str(v) for k, v in asdict(cfg.solver).items()}
    cp["grid"] = {"n_nodes": str(cfg.n_nodes)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def save(cfg: ExperimentConfig, path):
    Path(path).write_text(to_ini_string(cfg))
