"""Loss assembly, biased-training schedule, loop and checkpoints."""
from .checkpoint import (
    build_from_checkpoint,
    load_checkpoint,
    read_manifest,
    save_checkpoint,
)
from .loop import TrainResult, read_metrics, train
from .losses import LossBundle, assemble_loss, mask_loss
from .schedule import alpha_schedule

__all__ = [
    "LossBundle",
    "TrainResult",
    "alpha_schedule",
    "assemble_loss",
    "build_from_checkpoint",
    "load_checkpoint",
    "mask_loss",
    "read_manifest",
    "read_metrics",
    "save_checkpoint",
    "train",
]
