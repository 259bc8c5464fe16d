"""Small float64 neural-network engine: dense + LSTM layers, Adam, checkpoints."""

from .adam import AdamState, adam_step
from .checkpoint import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    load_checkpoint,
    save_checkpoint,
    tensor_sets,
)
from .net import NetSpec, RecurrentNet, backward_through_time, init_params, softmax

__all__ = [
    "AdamState",
    "CheckpointError",
    "CheckpointShapeError",
    "CheckpointTruncatedError",
    "CheckpointVersionError",
    "NetSpec",
    "RecurrentNet",
    "adam_step",
    "backward_through_time",
    "init_params",
    "load_checkpoint",
    "save_checkpoint",
    "softmax",
    "tensor_sets",
]
