"""Experiment orchestration: configuration, convergence runs, diagnose suite and CLI."""

from .config import ConfigError, ExperimentConfig, config_hash, load_config, parse_config
from .convergence import RateFit, fit_loglog, run_convergence, write_convergence_csv
from .diagnose import DiagnoseBundle, run_diagnose, write_diagnose_csv

__all__ = [
    "ConfigError", "ExperimentConfig", "config_hash", "load_config", "parse_config",
    "RateFit", "fit_loglog", "run_convergence", "write_convergence_csv",
    "DiagnoseBundle", "run_diagnose", "write_diagnose_csv",
]
