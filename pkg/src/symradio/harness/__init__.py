"""Experiment configuration, Monte Carlo sweeps and CSV results."""

from .config import PRESETS, ExperimentConfig, load_config, preset_config
from .experiments import ResultRow, iter_experiment, read_results, run_experiment, write_results

__all__ = [
    "PRESETS",
    "ExperimentConfig",
    "ResultRow",
    "iter_experiment",
    "load_config",
    "preset_config",
    "read_results",
    "run_experiment",
    "write_results",
]
