"""Experiment configuration, scheduling, persistence and reporting."""
from .config import DEFAULT_SEED, EXPERIMENTS, ConfigError, DependenceRecipe, ExperimentConfig, dump_config, load_config, parse_config
from .records import DiagnosticsRecord, emit_csv, emit_json, read_csv
from .report import convergence_report, monotonicity
from .runner import run_experiment

__all__ = [
    "DEFAULT_SEED", "EXPERIMENTS", "ConfigError", "DependenceRecipe", "ExperimentConfig", "dump_config",
    "load_config", "parse_config", "DiagnosticsRecord", "emit_csv", "emit_json", "read_csv",
    "convergence_report", "monotonicity", "run_experiment",
]
