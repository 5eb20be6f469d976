"""Experiment orchestration, reports and the command line interface."""

from .config import ExperimentConfig, load_config
from .experiment import RunRecord, SweepRow, run_experiment, sweep

__all__ = ["ExperimentConfig", "load_config", "RunRecord", "SweepRow", "run_experiment", "sweep"]
