"""Experiment orchestration, reference presets and the command-line interface."""

from .config import DiffusionSpec, ExperimentConfig, from_ini_string, load, save, to_ini_string
from .experiment import (
    Analysis,
    ComparisonReport,
    analyze,
    dispersion_dump,
    run_experiment,
    sweep,
    table1,
)
from .presets import PRESETS, REFERENCE_TABLE, preset

__all__ = [
    "Analysis", "ComparisonReport", "DiffusionSpec", "ExperimentConfig", "PRESETS", "REFERENCE_TABLE",
    "analyze", "dispersion_dump", "from_ini_string", "load", "preset", "run_experiment", "save",
    "sweep", "table1", "to_ini_string",
]
