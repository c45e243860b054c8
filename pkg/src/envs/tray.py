"""
Transport de plateau: déplacer un objet posé sur un plateau vers un but
sans l'incliner de plus de 15°.

État (position du plateau, inclinaison de l'objet, position du but).
Un déplacement incline l'objet de `tilt_sensitivity` bins dans le sens
opposé au mouvement; les actions tilt± compensent; rester ramène
l'inclinaison d'un bin vers 0.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from config import settings
from src.core.types import TaskRewardSpace
from src.envs.common import (
    AT_GOAL,
    GOAL_DISTANCE,
    EnvInstance,
    EnvSpec,
    indicator_cost_model,
    make_instance,
    spec_params,
    state_features_to_map,
)
from src.exceptions import ConfigurationError

FAMILY = "tray"
MAX_TILT_DEG = 30.0
TILT_LIMIT_DEG = 15.0

LEFT, RIGHT, TILT_MINUS, TILT_PLUS, STAY = range(5)
ACTIONS = ("left", "right", "tilt-", "tilt+", "stay")

FEATURE_NAMES = (
    GOAL_DISTANCE,
    AT_GOAL,
    "x_tray",
    "x_goal",
    "tilt_magnitude",
    "tilt_over_10",
    "tilt_over_15",
    "tilt_over_20",
)
TASK_BASIS = (GOAL_DISTANCE, AT_GOAL, "x_tray", "x_goal")


def tilt_cost(theta_deg: float) -> float:
    """c_E = 1 si |θ| > 15°."""
    return 1.0 if abs(theta_deg) > TILT_LIMIT_DEG else 0.0


def tilt_values(tilt_bins: int) -> np.ndarray:
    """Angles (°) des bins d'inclinaison sur [−30°, 30°]."""
    return np.linspace(-MAX_TILT_DEG, MAX_TILT_DEG, tilt_bins)


def default_configurations(positions: int) -> Tuple[Tuple[int, int], ...]:
    """Configurations (départ, but) d'entraînement."""
    near, far = positions // 10, positions - 1 - positions // 10
    quarter, three_quarters = positions // 4, (3 * positions) // 4
    return ((near, far), (far, near), (quarter, three_quarters), (three_quarters, quarter))


def _resolve_grid(grid) -> Tuple[int, int]:
    if grid is None:
        return settings.tray_positions, settings.tray_tilt_bins
    if isinstance(grid, int):
        return grid, settings.tray_tilt_bins
    positions, tilt_bins = grid
    return int(positions), int(tilt_bins)


def build_tray_env(
    seed: int,
    grid=None,
    tilt_sensitivity: int = 1,
    configurations: Optional[Sequence[Sequence[int]]] = None,
    discount: Optional[float] = None,
    horizon: Optional[int] = None,
) -> EnvInstance:
    """
    Construit une instance de transport de plateau.

    Args:
        seed: Graine (la dynamique est déterministe; la graine identifie l'instance)
        grid: (positions, bins d'inclinaison) ou nombre de positions
        tilt_sensitivity: Bins d'inclinaison par déplacement (1: barre, 2: forme en T)
        configurations: Paires (départ, but) en bins de position
        discount: Facteur d'actualisation (défaut: settings.discount)
        horizon: Horizon (défaut: settings.horizon)

    Returns:
        EnvInstance

    Raises:
        ConfigurationError: résolution insuffisante pour représenter la limite de 15°
    """
    positions, tilt_bins = _resolve_grid(grid)
    if positions < 5 or tilt_bins < 7 or tilt_bins % 2 == 0:
        raise ConfigurationError(
            f"résolution {positions}×{tilt_bins} insuffisante: "
            "il faut ≥ 5 positions et un nombre impair ≥ 7 de bins"
        )
    if tilt_sensitivity < 1:
        raise ConfigurationError("tilt_sensitivity doit être ≥ 1")

    configurations = tuple(
        (int(s), int(g)) for s, g in (configurations or default_configurations(positions))
    )
    for start, goal in configurations:
        if not (0 <= start < positions and 0 <= goal < positions):
            raise ConfigurationError(f"configuration hors grille: {(start, goal)}")

    center = tilt_bins // 2
    angles = tilt_values(tilt_bins)

    p, k, g = np.meshgrid(
        np.arange(positions), np.arange(tilt_bins), np.arange(positions), indexing="ij"
    )
    p, k, g = p.ravel(), k.ravel(), g.ravel()

    def index(pos, tilt, goal):
        return (pos * tilt_bins + tilt) * positions + goal

    next_states = np.zeros((p.size, len(ACTIONS)), dtype=np.int64)
    can_left, can_right = p > 0, p < positions - 1
    next_states[:, LEFT] = np.where(
        can_left, index(p - 1, np.clip(k + tilt_sensitivity, 0, tilt_bins - 1), g), index(p, k, g)
    )
    next_states[:, RIGHT] = np.where(
        can_right, index(p + 1, np.clip(k - tilt_sensitivity, 0, tilt_bins - 1), g), index(p, k, g)
    )
    next_states[:, TILT_MINUS] = index(p, np.clip(k - 1, 0, tilt_bins - 1), g)
    next_states[:, TILT_PLUS] = index(p, np.clip(k + 1, 0, tilt_bins - 1), g)
    next_states[:, STAY] = index(p, k - np.sign(k - center), g)

    theta = np.abs(angles[k])
    state_features = np.column_stack([
        np.abs(p - g) / (positions - 1),
        (p == g).astype(float),
        p / (positions - 1),
        g / (positions - 1),
        theta / MAX_TILT_DEG,
        (theta > 10.0).astype(float),
        (theta > TILT_LIMIT_DEG).astype(float),
        (theta > 20.0).astype(float),
    ])
    features = state_features_to_map(state_features, FEATURE_NAMES, len(ACTIONS), name=FAMILY)

    starts = [index(s, center, goal) for s, goal in configurations]
    start_dist = np.zeros(p.size)
    for s in starts:
        start_dist[s] += 1.0 / len(starts)

    spec = EnvSpec(
        family=FAMILY,
        seed=seed,
        grid=(positions, tilt_bins),
        params=spec_params(
            tilt_sensitivity=tilt_sensitivity,
            configurations=[list(c) for c in configurations],
            discount=discount,
            horizon=horizon,
        ),
    )
    return make_instance(
        family=FAMILY,
        seed=seed,
        spec=spec,
        next_states=next_states,
        start_dist=start_dist,
        features=features,
        expert_cost=indicator_cost_model("tilt_over_15", FEATURE_NAMES),
        task_space=TaskRewardSpace(
            FEATURE_NAMES, TASK_BASIS, (AT_GOAL,), settings.task_weight_bound
        ),
        configurations=tuple(
            (index(s, center, goal), index(goal, center, goal)) for s, goal in configurations
        ),
        discount=settings.discount if discount is None else discount,
        horizon=horizon or settings.horizon,
        metadata={
            "positions": positions,
            "tilt_bins": tilt_bins,
            "bin_configurations": configurations,
        },
    )
