"""Moment reconstruction losses for conditional GANs: a desk-scale lab."""

from ._mrlab import (
    ConfigError,
    NumericError,
    config_keys,
    decompose,
    gradcheck,
    make_dataset,
    median_scan,
    normalize_config,
    run_id,
    train,
)

__all__ = [
    "ConfigError",
    "NumericError",
    "config_keys",
    "decompose",
    "gradcheck",
    "make_dataset",
    "median_scan",
    "normalize_config",
    "run_id",
    "train",
]
