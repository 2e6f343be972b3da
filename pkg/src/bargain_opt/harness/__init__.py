from .config import ConfigError, RunConfig, load_config
from .io import read_trajectory_csv, write_trajectory_csv
from .runner import ExperimentError, RunReport, run_experiment

__all__ = [
    "ConfigError",
    "ExperimentError",
    "RunConfig",
    "RunReport",
    "load_config",
    "read_trajectory_csv",
    "run_experiment",
    "write_trajectory_csv",
]
