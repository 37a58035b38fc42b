"""Configuration, Monte-Carlo sweeps and result files."""

from .config import ConfigError, ExperimentConfig, load_config, validate
from .runner import ExperimentResult, run_experiment

__all__ = ["ConfigError", "ExperimentConfig", "ExperimentResult", "load_config", "run_experiment", "validate"]
