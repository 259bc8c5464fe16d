"""Experiment harness: config parsing, training/evaluation drivers and the CLI."""

from .runner import (
    BASELINE_COLUMNS,
    TRAINING_COLUMNS,
    VALIDATION_COLUMNS,
    CheckpointMismatchError,
    baseline_rows,
    eval_grid,
    export_metrics,
    read_checkpoint,
    run_baseline,
    run_eval,
    run_sweep,
    run_train,
)
from .spec import (
    ConfigError,
    ConfigFileNotFound,
    ConfigRangeError,
    ConfigSchemaError,
    ExperimentSpec,
    parse_config,
    spec_from_mapping,
)

__all__ = [
    "BASELINE_COLUMNS",
    "TRAINING_COLUMNS",
    "VALIDATION_COLUMNS",
    "CheckpointMismatchError",
    "ConfigError",
    "ConfigFileNotFound",
    "ConfigRangeError",
    "ConfigSchemaError",
    "ExperimentSpec",
    "baseline_rows",
    "eval_grid",
    "export_metrics",
    "parse_config",
    "read_checkpoint",
    "run_baseline",
    "run_eval",
    "run_sweep",
    "run_train",
    "spec_from_mapping",
]
