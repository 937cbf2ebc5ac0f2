"""Experiment runner, reports and command line."""

from .experiments import (
    BoostingComparison,
    ExperimentConfig,
    ExperimentReport,
    boosting_costs,
    compare_boosting,
    crossover_k,
    estimate_error,
    wilson_interval,
)

__all__ = [
    "BoostingComparison",
    "ExperimentConfig",
    "ExperimentReport",
    "boosting_costs",
    "compare_boosting",
    "crossover_k",
    "estimate_error",
    "wilson_interval",
]
