"""Learning-driven annealing toolkit for Ising spin glasses."""
from .kernels import BACKEND
from .spin_model import (
    SpinGlassInstance,
    apply_gauge,
    energy,
    hamming,
    is_local_minimum,
    q_ea,
    q_f,
    satisfied_sets,
    spin_reversal_transform,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "SpinGlassInstance",
    "apply_gauge",
    "energy",
    "hamming",
    "is_local_minimum",
    "q_ea",
    "q_f",
    "satisfied_sets",
    "spin_reversal_transform",
]
