"""
Suivi de mur: atteindre un but en restant à une distance comprise entre
0.1 et 0.15 d'un mur courbe y = A sin²(πx) + B cos(πx/2).

La région sous la courbe est solide (non franchissable).
"""

from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import distance_transform_edt

from config import settings
from src.core.types import TaskRewardSpace
from src.envs.common import (
    AT_GOAL,
    GOAL_DISTANCE,
    MOVES_8,
    EnvInstance,
    EnvSpec,
    Grid2D,
    indicator_cost_model,
    make_instance,
    spec_params,
    state_features_to_map,
)
from src.exceptions import ConfigurationError, InfeasibleError
from src.utils.seeding import substream

FAMILY = "wall"
CURVE_RANGE = (0.1, 0.3)
NEAR_LIMIT = 0.1
FAR_LIMIT = 0.15
MIN_GRID = 21

FEATURE_NAMES = (GOAL_DISTANCE, AT_GOAL, "wall_distance", "wall_near", "wall_far")
TASK_BASIS = (GOAL_DISTANCE, AT_GOAL)


def wall_cost(d_wall: float) -> float:
    """c_E = 1 si d < 0.1 ou d > 0.15."""
    return 1.0 if d_wall < NEAR_LIMIT or d_wall > FAR_LIMIT else 0.0


def wall_curve(x: np.ndarray, a: float, b: float) -> np.ndarray:
    return a * np.sin(np.pi * x) ** 2 + b * np.cos(np.pi * x / 2.0)


def default_columns(n: int) -> Tuple[int, int]:
    """Colonnes (départ, but) d'entraînement."""
    return n // 10, n - 1 - n // 10


def corridor_cell(grid: Grid2D, d_wall: np.ndarray, column: int) -> int:
    """
    Cellule du couloir (d ∈ [0.1, 0.15]) la plus proche du milieu du couloir
    dans une colonne.

    Raises:
        InfeasibleError: aucune cellule du couloir dans la colonne
    """
    states = np.flatnonzero(grid.ix == column)
    distances = d_wall[states]
    inside = (distances >= NEAR_LIMIT) & (distances <= FAR_LIMIT)
    if not inside.any():
        raise InfeasibleError(f"aucune cellule de couloir dans la colonne {column}")
    middle = 0.5 * (NEAR_LIMIT + FAR_LIMIT)
    candidates = states[inside]
    return int(candidates[np.argmin(np.abs(d_wall[candidates] - middle))])


def build_wall_env(
    seed: int,
    curve_params: Optional[Tuple[float, float]] = None,
    grid: Optional[int] = None,
    start_col: Optional[int] = None,
    goal_col: Optional[int] = None,
    discount: Optional[float] = None,
    horizon: Optional[int] = None,
) -> EnvInstance:
    """
    Construit une instance de suivi de mur.

    Args:
        seed: Graine (tire (A, B) si curve_params est absent)
        curve_params: (A, B) ∈ [0.1, 0.3]²
        grid: Taille n de la grille n×n (défaut: settings.grid_size)
        start_col: Colonne de départ
        goal_col: Colonne du but
        discount: Facteur d'actualisation
        horizon: Horizon

    Returns:
        EnvInstance

    Raises:
        ConfigurationError: paramètres de courbe hors domaine ou grille trop petite
        InfeasibleError: pas de couloir faisable à cette résolution
    """
    n = int(grid or settings.grid_size)
    if n < MIN_GRID:
        raise ConfigurationError(
            f"grille {n} trop petite pour représenter le couloir (≥ {MIN_GRID})"
        )
    if curve_params is None:
        rng = substream(seed, FAMILY, "curve")
        curve_params = tuple(float(v) for v in rng.uniform(*CURVE_RANGE, size=2))
    a, b = (float(v) for v in curve_params)
    low, high = CURVE_RANGE
    if not (low <= a <= high and low <= b <= high):
        raise ConfigurationError(f"paramètres de courbe hors de [0.1, 0.3]: {(a, b)}")

    default_start, default_goal = default_columns(n)
    start_col = default_start if start_col is None else int(start_col)
    goal_col = default_goal if goal_col is None else int(goal_col)
    if not (0 <= start_col < n and 0 <= goal_col < n):
        raise ConfigurationError(f"colonnes hors grille: {(start_col, goal_col)}")

    open_grid = Grid2D(n, MOVES_8)
    solid = (open_grid.y <= wall_curve(open_grid.x, a, b)).reshape(n, n)
    grid2d = Grid2D(n, MOVES_8, blocked=solid)
    # distance en cellules, puis en unités normalisées
    d_wall = distance_transform_edt(~solid).ravel() / (n - 1)

    start = corridor_cell(grid2d, d_wall, start_col)
    goal = corridor_cell(grid2d, d_wall, goal_col)
    if start == goal:
        raise InfeasibleError("départ et but confondus")

    gx, gy = grid2d.coords(goal)
    goal_distance = np.hypot(grid2d.ix - gx, grid2d.iy - gy) / ((n - 1) * np.sqrt(2.0))
    near = (d_wall < NEAR_LIMIT).astype(float)
    far = (d_wall > FAR_LIMIT).astype(float)
    state_features = np.column_stack([
        goal_distance,
        (np.arange(grid2d.n_states) == goal).astype(float),
        np.minimum(d_wall, 1.0),
        near,
        far,
    ])
    features = state_features_to_map(state_features, FEATURE_NAMES, grid2d.n_actions, name=FAMILY)

    spec = EnvSpec(
        family=FAMILY,
        seed=seed,
        grid=n,
        params=spec_params(
            curve_params=[a, b],
            start_col=start_col,
            goal_col=goal_col,
            discount=discount,
            horizon=horizon,
        ),
    )
    return make_instance(
        family=FAMILY,
        seed=seed,
        spec=spec,
        next_states=grid2d.next_states(),
        start_dist=grid2d.start_distribution([start]),
        features=features,
        expert_cost=indicator_cost_model("wall_near", FEATURE_NAMES, others=("wall_far",)),
        task_space=TaskRewardSpace(
            FEATURE_NAMES, TASK_BASIS, (AT_GOAL,), settings.task_weight_bound
        ),
        configurations=((start, goal),),
        discount=settings.discount if discount is None else discount,
        horizon=horizon or settings.horizon,
        metadata={"grid": n, "curve_params": (a, b), "columns": (start_col, goal_col)},
    )
