"""
Échantillonnage de trajectoires sous une politique de Boltzmann.
"""

from typing import List, Optional

import numpy as np

from src.core.types import TabularCMDP, Trajectory
from src.exceptions import ArgumentError
from src.solver.soft_value_iteration import BoltzmannPolicy
from src.utils.seeding import substream


def _row_cumulative(cmdp: TabularCMDP) -> np.ndarray:
    """
    Clés croissantes row + cumul intra-ligne pour l'échantillonnage vectorisé
    des transitions (le dernier cumul de chaque ligne vaut exactement 1).
    """
    matrix = cmdp.transition
    lengths = np.diff(matrix.indptr)
    row_of = np.repeat(np.arange(matrix.shape[0]), lengths)
    cumulative = np.cumsum(matrix.data)
    row_start_totals = np.concatenate([[0.0], cumulative])[matrix.indptr[:-1]]
    within = cumulative - np.repeat(row_start_totals, lengths)
    within[matrix.indptr[1:] - 1] = 1.0
    return row_of + within


def rollout(
    cmdp: TabularCMDP,
    policy: BoltzmannPolicy,
    seed: int,
    count: int,
    horizon: Optional[int] = None,
    start_dist: Optional[np.ndarray] = None,
) -> List[Trajectory]:
    """
    Échantillonne `count` trajectoires (jusqu'à l'horizon ou un état terminal).

    Le pas sur un état terminal est enregistré, puis la trajectoire s'arrête.

    Args:
        cmdp: CMDP tabulaire
        policy: Politique à suivre
        seed: Graine (sous-flux "rollout")
        count: Nombre de trajectoires
        horizon: Longueur maximale (défaut: cmdp.horizon)
        start_dist: Distribution initiale (défaut: cmdp.start_dist)

    Returns:
        Liste de trajectoires
    """
    if count < 1:
        raise ArgumentError(f"count doit être ≥ 1 (reçu {count})")
    horizon = horizon or cmdp.horizon
    rng = substream(seed, "rollout")
    start = cmdp.start_dist if start_dist is None else np.asarray(start_dist, dtype=np.float64)

    keys = _row_cumulative(cmdp)
    action_cumulative = np.cumsum(policy.probs, axis=1)
    action_cumulative[:, -1] = 1.0
    terminal = np.zeros(cmdp.n_states, dtype=bool)
    terminal[list(cmdp.terminal_states)] = True

    start_cumulative = np.cumsum(start)
    start_cumulative[-1] = 1.0
    current = np.searchsorted(start_cumulative, rng.random(count), side="right")

    states = np.zeros((count, horizon), dtype=np.int64)
    actions = np.zeros((count, horizon), dtype=np.int64)
    lengths = np.full(count, horizon, dtype=np.int64)
    alive = np.ones(count, dtype=bool)

    for t in range(horizon):
        u = rng.random(count)
        chosen = (u[:, None] >= action_cumulative[current]).sum(axis=1)
        chosen = np.minimum(chosen, cmdp.n_actions - 1)
        rows = current * cmdp.n_actions + chosen
        nxt = cmdp.transition.indices[np.searchsorted(keys, rows + rng.random(count), side="right")]

        states[alive, t] = current[alive]
        actions[alive, t] = chosen[alive]
        stopping = alive & terminal[current]
        lengths[stopping] = t + 1
        alive &= ~stopping
        current = np.where(alive, nxt, current)
        if not alive.any():
            break

    trajectories = []
    for i in range(count):
        n = int(lengths[i])
        final = None if terminal[states[i, n - 1]] else int(current[i])
        trajectories.append(Trajectory(states[i, :n], actions[i, :n], final))
    return trajectories
