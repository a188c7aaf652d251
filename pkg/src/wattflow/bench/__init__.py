"""Desk-scale scalability experiment harness."""

from .harness import (
    ExperimentConfig,
    ExperimentError,
    ExperimentReport,
    calibrate_capacity,
    measure_worker_count,
    run_experiment,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentError",
    "ExperimentReport",
    "calibrate_capacity",
    "measure_worker_count",
    "run_experiment",
]
