"""Apprentissage TCL: IRL à entropie maximale et décomposition de récompense."""

from .config import TclConfig
from .irl import IrlState, evaluate_reward, irl_step
from .decomposition import (
    ApproximateDecompositionObjective,
    DecompositionResult,
    ExactDecompositionObjective,
    decompose_approx,
    decompose_exact,
    energy_kl,
)
from .tcl import tcl_train

__all__ = [
    "TclConfig",
    "IrlState",
    "evaluate_reward",
    "irl_step",
    "ApproximateDecompositionObjective",
    "DecompositionResult",
    "ExactDecompositionObjective",
    "decompose_approx",
    "decompose_exact",
    "energy_kl",
    "tcl_train",
]
