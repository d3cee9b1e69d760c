"""Simulated benchmarks with image observations.

Each environment owns a low-dimensional ground-truth state used only
for simulation and evaluation; learning code sees rendered frames.
"""

from .base import Env, EnvSpec, TaskSpec, angle_diff, make_env
from .dataset import TripletDataset, load_triplets, save_triplets
from .sampling import sample_triplets

__all__ = [
    "Env",
    "EnvSpec",
    "TaskSpec",
    "TripletDataset",
    "angle_diff",
    "load_triplets",
    "make_env",
    "sample_triplets",
    "save_triplets",
]
