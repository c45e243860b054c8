"""
Essuyage: parcourir une surface y = 0.5 + A sin(πx) en maintenant une force
de contact d'au moins 0.8.

La force synthétique dépend de l'enfoncement sous la surface (en bins):
0 au-dessus, puis min(1.5, 0.5 + 0.5·profondeur). Les cellules à profondeur
≥ 3 sont bloquées. Le coût ne porte que sur les cellules en contact.
"""

from typing import Optional

import numpy as np

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

FAMILY = "wiping"
MAX_AMPLITUDE = 0.3
FORCE_LIMIT = 0.8
MAX_FORCE = 1.5
BLOCKED_DEPTH = 3
PREFERRED_DEPTH = 1

FEATURE_NAMES = (GOAL_DISTANCE, AT_GOAL, "contact_force", "force_low")
TASK_BASIS = (GOAL_DISTANCE, AT_GOAL)


def force_cost(f_normal: float, in_contact: bool = True) -> float:
    """c_E = 1 si f < 0.8 en contact avec la surface, 0 au-dessus."""
    return 1.0 if in_contact and f_normal < FORCE_LIMIT else 0.0


def surface(x: np.ndarray, amplitude: float) -> np.ndarray:
    return 0.5 + amplitude * np.sin(np.pi * x)


def contact_force(depth_bins: np.ndarray) -> np.ndarray:
    """Force pour une profondeur en bins (négative: au-dessus de la surface)."""
    depth_bins = np.asarray(depth_bins)
    force = np.minimum(MAX_FORCE, 0.5 + 0.5 * np.maximum(depth_bins, 0))
    return np.where(depth_bins < 0, 0.0, force)


def depth_bins(grid: Grid2D, amplitude: float) -> np.ndarray:
    """Profondeur (en bins) de chaque cellule sous la surface, −1 au-dessus."""
    offset = (surface(grid.x, amplitude) - grid.y) * (grid.n - 1)
    return np.where(offset >= 0.0, np.floor(offset + 1e-9), -1).astype(np.int64)


def contact_cell(grid: Grid2D, depth: np.ndarray, column: int) -> int:
    """Cellule de la colonne à la profondeur préférée."""
    states = np.flatnonzero((grid.ix == column) & (depth == PREFERRED_DEPTH))
    if states.size == 0:
        raise InfeasibleError(f"aucune cellule de contact dans la colonne {column}")
    return int(states[0])


def build_wiping_env(
    seed: int,
    amplitude: Optional[float] = None,
    grid: Optional[int] = None,
    start_col: Optional[int] = None,
    goal_col: Optional[int] = None,
    discount: Optional[float] = None,
    horizon: Optional[int] = None,
) -> EnvInstance:
    """
    Construit une instance d'essuyage.

    Args:
        seed: Graine (tire A si amplitude est absente)
        amplitude: A ∈ [−0.3, 0.3]
        grid: Taille n de la grille n×n
        start_col: Colonne de départ
        goal_col: Colonne du but
        discount: Facteur d'actualisation
        horizon: Horizon

    Returns:
        EnvInstance
    """
    n = int(grid or settings.grid_size)
    if n < 11:
        raise ConfigurationError(f"grille {n} trop petite pour l'essuyage (≥ 11)")
    if amplitude is None:
        rng = substream(seed, FAMILY, "amplitude")
        amplitude = float(rng.uniform(-MAX_AMPLITUDE, MAX_AMPLITUDE))
    amplitude = float(amplitude)
    if abs(amplitude) > MAX_AMPLITUDE:
        raise ConfigurationError(f"amplitude hors de [−0.3, 0.3]: {amplitude}")

    start_col = n // 10 if start_col is None else int(start_col)
    goal_col = n - 1 - n // 10 if goal_col is None else int(goal_col)
    if not (0 <= start_col < n and 0 <= goal_col < n) or start_col == goal_col:
        raise ConfigurationError(f"colonnes invalides: {(start_col, goal_col)}")

    open_grid = Grid2D(n, MOVES_8)
    depth = depth_bins(open_grid, amplitude)
    grid2d = Grid2D(n, MOVES_8, blocked=(depth >= BLOCKED_DEPTH).reshape(n, n))

    start = contact_cell(grid2d, depth, start_col)
    goal = contact_cell(grid2d, depth, goal_col)

    force = contact_force(depth)
    in_contact = depth >= 0
    state_features = np.column_stack([
        np.abs(grid2d.ix - goal_col) / (n - 1),
        (grid2d.ix == goal_col).astype(float),
        force / MAX_FORCE,
        (in_contact & (force < FORCE_LIMIT)).astype(float),
    ])
    features = state_features_to_map(state_features, FEATURE_NAMES, grid2d.n_actions, name=FAMILY)

    spec = EnvSpec(
        family=FAMILY,
        seed=seed,
        grid=n,
        params=spec_params(
            amplitude=amplitude,
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
        expert_cost=indicator_cost_model("force_low", FEATURE_NAMES),
        task_space=TaskRewardSpace(
            FEATURE_NAMES, TASK_BASIS, (AT_GOAL,), settings.task_weight_bound
        ),
        configurations=((start, goal),),
        discount=settings.discount if discount is None else discount,
        horizon=horizon or settings.horizon,
        metadata={"grid": n, "amplitude": amplitude, "columns": (start_col, goal_col)},
    )
