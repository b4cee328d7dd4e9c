"""Configs, seeded experiment sweeps, result tables and the command line."""

from .config import ExperimentConfig, build_config, default_scenario, load_config
from .experiments import run_experiment
from .results import COLUMNS, ResultTable, Row, emit_results, read_results

__all__ = [
    "COLUMNS",
    "ExperimentConfig",
    "ResultTable",
    "Row",
    "build_config",
    "default_scenario",
    "emit_results",
    "load_config",
    "read_results",
    "run_experiment",
]
