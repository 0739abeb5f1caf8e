"""Experiment harness: configuration, orchestration, reporting, CLI."""

from .config import ExperimentConfig
from .experiment import RunManifest, resolve_data_path, run_experiment
from .fetch import fetch, verify
from .report import ResultRow, emit_report

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "RunManifest",
    "emit_report",
    "fetch",
    "resolve_data_path",
    "run_experiment",
    "verify",
]
