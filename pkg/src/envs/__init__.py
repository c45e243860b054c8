"""Environnements grille: plateau, mur, essuyage, atteinte 2D."""

from .common import EnvInstance, EnvSpec, goal_distance_reward
from .tray import build_tray_env, tilt_cost
from .wall import build_wall_env, wall_cost
from .wiping import build_wiping_env, force_cost
from .reaching import build_reaching_env
from .suite import AVAILABLE_FAMILIES, build_env, build_training_env, sample_eval_suite

__all__ = [
    "EnvInstance",
    "EnvSpec",
    "goal_distance_reward",
    "build_tray_env",
    "tilt_cost",
    "build_wall_env",
    "wall_cost",
    "build_wiping_env",
    "force_cost",
    "build_reaching_env",
    "AVAILABLE_FAMILIES",
    "build_env",
    "build_training_env",
    "sample_eval_suite",
]
