"""Error reduction for Equality-oracle protocol trees by a self-correcting walk."""

from .walk import (
    AugmentedTree,
    NoisyConfig,
    NoisyRunStats,
    augment,
    bits_per_round,
    extension_depth,
    naive_cost,
    noisy_cost,
    rounds_for,
    run_naive,
    run_noisy,
)

__all__ = [
    "AugmentedTree",
    "NoisyConfig",
    "NoisyRunStats",
    "augment",
    "bits_per_round",
    "extension_depth",
    "naive_cost",
    "noisy_cost",
    "rounds_for",
    "run_naive",
    "run_noisy",
]
