"""Solveurs entropiques tabulaires."""

from .soft_value_iteration import (
    BoltzmannPolicy,
    SoftQTable,
    SoftSolution,
    as_reward_table,
    boltzmann_policy,
    soft_value_iteration,
)
from .occupancy import OccupancyMeasure, occupancy
from .evaluation import evaluate_under_policy, policy_matrix, solve_policy_values
from .rollout import rollout
from .divergence import kl_policy_divergence, state_kl

__all__ = [
    "BoltzmannPolicy",
    "SoftQTable",
    "SoftSolution",
    "as_reward_table",
    "boltzmann_policy",
    "soft_value_iteration",
    "OccupancyMeasure",
    "occupancy",
    "evaluate_under_policy",
    "policy_matrix",
    "solve_policy_values",
    "rollout",
    "kl_policy_divergence",
    "state_kl",
]
