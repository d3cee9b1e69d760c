"""Encoder + conditional-Gaussian latent dynamics, and their training."""

from .checkpoint import load_checkpoint, save_checkpoint
from .losses import (
    LatentBatch,
    consistency_bound,
    curvature_loss,
    total_objective,
)
from .networks import LatentDynamicsModel, build_model
from .training import (
    TrainConfig,
    TrainLog,
    encode_dataset,
    final_metrics,
    latent_map_size,
    retrain_dynamics,
    train,
)

__all__ = [
    "LatentBatch",
    "LatentDynamicsModel",
    "TrainConfig",
    "TrainLog",
    "build_model",
    "consistency_bound",
    "curvature_loss",
    "encode_dataset",
    "final_metrics",
    "latent_map_size",
    "load_checkpoint",
    "retrain_dynamics",
    "save_checkpoint",
    "total_objective",
    "train",
]
