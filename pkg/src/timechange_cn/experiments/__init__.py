"""Experiment runner, reporters and CLI"""

from .runner import ExperimentConfig, ExperimentName, ExperimentResult, run_experiment
from .reporters import ConsoleReporter, CSVReporter

__all__ = [
    "ExperimentConfig",
    "ExperimentName",
    "ExperimentResult",
    "run_experiment",
    "ConsoleReporter",
    "CSVReporter",
]
