"""Exact numerical checks behind the training objective."""

from .counterexample import (
    CounterexampleState,
    counterexample_objectives,
    counterexample_train,
)
from .migap import (
    DiscreteJoint,
    MiGapResult,
    constant_code_instance,
    injective_instance,
    mi_gap_check,
    mutual_information,
    random_instance,
)

__all__ = [
    "CounterexampleState",
    "DiscreteJoint",
    "MiGapResult",
    "constant_code_instance",
    "counterexample_objectives",
    "counterexample_train",
    "injective_instance",
    "mi_gap_check",
    "mutual_information",
    "random_instance",
]
