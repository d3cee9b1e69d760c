"""Locally-linear control in the learned latent space."""

from .execute import ControlOptions, ControlScore, execute
from .ilqr import (
    IlqrOptions,
    IlqrSolution,
    QuadraticLatentCost,
    ilqr_solve,
    linearize,
)

__all__ = [
    "ControlOptions",
    "ControlScore",
    "IlqrOptions",
    "IlqrSolution",
    "QuadraticLatentCost",
    "execute",
    "ilqr_solve",
    "linearize",
]
