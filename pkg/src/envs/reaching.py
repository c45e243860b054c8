"""
Atteinte 2D: rejoindre un but en évitant une bande de danger verticale
percée d'une ouverture. Sert à mesurer la qualité de la décomposition:
la récompense de référence est r = r_p* + r_c* avec r_p* = −goal_distance
et r_c* = −hazard.
"""

import math
from typing import Optional, Sequence, Tuple

import numpy as np

from config import settings
from src.core.types import LinearRewardModel, RewardKind, TaskRewardSpace
from src.envs.common import (
    AT_GOAL,
    GOAL_DISTANCE,
    MOVES_4,
    EnvInstance,
    EnvSpec,
    Grid2D,
    indicator_cost_model,
    make_instance,
    spec_params,
    state_features_to_map,
)
from src.exceptions import ConfigurationError
from src.utils.seeding import substream

FAMILY = "reaching"
HAZARD = "hazard"
MIN_COVERAGE = 0.06
MAX_COVERAGE = 0.35

FEATURE_NAMES = (GOAL_DISTANCE, AT_GOAL, HAZARD)
TASK_BASIS = (GOAL_DISTANCE, AT_GOAL)


def zones(n: int) -> Tuple[Tuple[int, int], Tuple[int, int], Tuple[int, int]]:
    """Colonnes (min, max) inclusives des zones départ, milieu et but."""
    edge = n // 5
    return (0, edge), (edge + 1, n - 2 - edge), (n - 1 - edge, n - 1)


def hazard_width_range(n: int) -> Tuple[int, int]:
    """Largeurs de bande admissibles (couverture entre ~5 % et 40 %)."""
    gap = max(2, n // 4)
    (_, _), (mid_lo, mid_hi), _ = zones(n)
    middle = mid_hi - mid_lo + 1
    k_min = math.ceil(MIN_COVERAGE * n * n / (n - gap))
    k_max = min(math.floor(MAX_COVERAGE * n * n / (n - gap)), middle)
    return max(1, min(k_min, k_max)), max(1, k_max)


def ground_truth_models(
    feature_names: Sequence[str],
) -> Tuple[LinearRewardModel, LinearRewardModel]:
    """(r_p*, r_c*) de référence."""
    r_p = LinearRewardModel.from_dict({GOAL_DISTANCE: -1.0}, feature_names, RewardKind.TASK)
    r_c = LinearRewardModel.from_dict({HAZARD: -1.0}, feature_names, RewardKind.RESIDUAL)
    return r_p, r_c


def build_reaching_env(
    seed: int,
    grid: Optional[int] = None,
    start: Optional[Sequence[int]] = None,
    goal: Optional[Sequence[int]] = None,
    hazard: Optional[Sequence[int]] = None,
    discount: Optional[float] = None,
    horizon: Optional[int] = None,
) -> EnvInstance:
    """
    Construit une instance d'atteinte 2D.

    Args:
        seed: Graine (tire départ, but et bande de danger s'ils sont absents)
        grid: Taille n de la grille n×n
        start: Cellule de départ (ix, iy), colonne dans [0, n//5]
        goal: Cellule but (ix, iy), colonne dans [n−1−n//5, n−1]
        hazard: (première colonne, largeur, première ligne de l'ouverture)
        discount: Facteur d'actualisation
        horizon: Horizon

    Returns:
        EnvInstance avec ground_truth = (r_p*, r_c*)
    """
    n = int(grid or settings.grid_size)
    if n < 5:
        raise ConfigurationError(f"grille {n} trop petite (≥ 5)")
    rng = substream(seed, FAMILY, "layout")
    (start_lo, start_hi), (mid_lo, mid_hi), (goal_lo, goal_hi) = zones(n)
    gap = max(2, n // 4)

    if start is None:
        start = (int(rng.integers(start_lo, start_hi + 1)), int(rng.integers(0, n)))
    if goal is None:
        goal = (int(rng.integers(goal_lo, goal_hi + 1)), int(rng.integers(0, n)))
    if hazard is None:
        k_min, k_max = hazard_width_range(n)
        width = int(rng.integers(k_min, k_max + 1))
        first = int(rng.integers(mid_lo, mid_hi - width + 2))
        gap_start = int(rng.integers(0, n - gap + 1))
        hazard = (first, width, gap_start)
    start, goal = tuple(int(v) for v in start), tuple(int(v) for v in goal)
    first, width, gap_start = (int(v) for v in hazard)

    if not (start_lo <= start[0] <= start_hi and 0 <= start[1] < n):
        raise ConfigurationError(f"départ hors de la zone de départ: {start}")
    if not (goal_lo <= goal[0] <= goal_hi and 0 <= goal[1] < n):
        raise ConfigurationError(f"but hors de la zone de but: {goal}")
    if width < 1 or first < mid_lo or first + width - 1 > mid_hi:
        raise ConfigurationError(f"bande de danger hors de la zone centrale: {hazard}")
    if not 0 <= gap_start <= n - gap:
        raise ConfigurationError(f"ouverture hors grille: {gap_start}")

    grid2d = Grid2D(n, MOVES_4)
    in_band = (grid2d.ix >= first) & (grid2d.ix < first + width)
    in_gap = (grid2d.iy >= gap_start) & (grid2d.iy < gap_start + gap)
    hazard_cells = (in_band & ~in_gap).astype(float)

    start_state, goal_state = grid2d.index(*start), grid2d.index(*goal)
    goal_distance = np.hypot(grid2d.ix - goal[0], grid2d.iy - goal[1]) / ((n - 1) * np.sqrt(2.0))
    state_features = np.column_stack([
        goal_distance,
        (np.arange(grid2d.n_states) == goal_state).astype(float),
        hazard_cells,
    ])
    features = state_features_to_map(state_features, FEATURE_NAMES, grid2d.n_actions, name=FAMILY)

    spec = EnvSpec(
        family=FAMILY,
        seed=seed,
        grid=n,
        params=spec_params(
            start=list(start),
            goal=list(goal),
            hazard=[first, width, gap_start],
            discount=discount,
            horizon=horizon,
        ),
    )
    return make_instance(
        family=FAMILY,
        seed=seed,
        spec=spec,
        next_states=grid2d.next_states(),
        start_dist=grid2d.start_distribution([start_state]),
        features=features,
        expert_cost=indicator_cost_model(HAZARD, FEATURE_NAMES),
        task_space=TaskRewardSpace(
            FEATURE_NAMES, TASK_BASIS, (AT_GOAL,), settings.task_weight_bound
        ),
        configurations=((start_state, goal_state),),
        discount=settings.discount if discount is None else discount,
        horizon=horizon or settings.horizon,
        ground_truth=ground_truth_models(FEATURE_NAMES),
        metadata={"grid": n, "hazard_coverage": float(hazard_cells.mean())},
    )
