"""Configuration, study orchestration and command-line interface."""
from .config import ConfigError, StudyConfig, config_hash, load_config, parse_config
from .studies import (run_gamma_study, run_property_suite, run_renormalization_study, write_csv)

__all__ = [
    "ConfigError",
    "StudyConfig",
    "config_hash",
    "load_config",
    "parse_config",
    "run_gamma_study",
    "run_renormalization_study",
    "run_property_suite",
    "write_csv",
]
