"""
Briques communes des environnements grille: instance, recette de
reconstruction, grilles 2D déterministes, vérification de faisabilité.
"""

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from src.core.types import (
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    TaskRewardSpace,
)
from src.exceptions import ConfigurationError, InfeasibleError

GOAL_DISTANCE = "goal_distance"
AT_GOAL = "at_goal"

# Déplacements (dx, dy); l'indice 0 est toujours "rester"
MOVES_4 = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1))
MOVES_8 = ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def goal_distance_reward(d: float) -> float:
    """Récompense experte: 1 si d ≤ 0.01, sinon −0.1·d."""
    return 1.0 if d <= 0.01 else -0.1 * d


def expert_reward_model(feature_names: Sequence[str]) -> LinearRewardModel:
    """r_E = 1·at_goal − 0.1·goal_distance sur les features de l'environnement."""
    weights = {AT_GOAL: 1.0, GOAL_DISTANCE: -0.1}
    return LinearRewardModel.from_dict(weights, feature_names, RewardKind.OVERALL)


def indicator_cost_model(
    name: str, feature_names: Sequence[str], others: Sequence[str] = ()
) -> LinearRewardModel:
    """Coût indicateur c = Σ features indicatrices (disjointes)."""
    weights = {n: 1.0 for n in (name, *others)}
    return LinearRewardModel.from_dict(weights, feature_names, RewardKind.COST)


def spec_params(**params: Any) -> Dict[str, Any]:
    """Paramètres résolus d'une recette (les valeurs None sont omises)."""
    return {k: v for k, v in params.items() if v is not None}


class EnvSpec(BaseModel):
    """Recette de reconstruction d'une instance (famille, graine, grille, paramètres)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: str
    seed: int
    grid: Optional[Union[int, Tuple[int, int]]] = None
    params: Dict[str, Any] = Field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class EnvInstance:
    """Environnement tabulaire complet avec récompense et coût experts."""

    cmdp: TabularCMDP
    features: FeatureMap
    expert_reward: LinearRewardModel
    expert_cost: LinearRewardModel
    goal_states: FrozenSet[int]
    name: str
    seed: int
    family: str
    spec: EnvSpec
    task_space: TaskRewardSpace
    configurations: Tuple[Tuple[int, int], ...] = ()
    ground_truth: Optional[Tuple[LinearRewardModel, LinearRewardModel]] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.features.check_compatible(self.cmdp)
        if self.expert_cost.kind is not RewardKind.COST:
            raise ConfigurationError("le coût expert doit être de type cost")
        costs = self.expert_cost.evaluate(self.features)
        if not np.all(np.isin(costs, (0.0, 1.0))):
            raise ConfigurationError("le coût expert doit être indicateur (valeurs 0 ou 1)")
        if not self.goal_states:
            raise InfeasibleError(f"{self.name}: aucun état but")

    def goal_predicate(self, state: int) -> bool:
        return int(state) in self.goal_states

    @property
    def goal_mask(self) -> np.ndarray:
        mask = np.zeros(self.cmdp.n_states, dtype=bool)
        mask[sorted(self.goal_states)] = True
        return mask

    def cost_table(self) -> np.ndarray:
        return self.expert_cost.evaluate(self.features)

    def fingerprint(self) -> str:
        """Empreinte SHA-256 des tables de l'instance."""
        digest = hashlib.sha256()
        matrix = self.cmdp.transition
        arrays = (
            matrix.data,
            matrix.indices,
            matrix.indptr,
            self.cmdp.start_dist,
            self.features.values,
            self.expert_reward.weights,
            self.expert_cost.weights,
        )
        for array in arrays:
            digest.update(np.ascontiguousarray(array).tobytes())
        digest.update("|".join(self.features.names).encode("utf-8"))
        digest.update(f"{self.cmdp.discount!r}|{self.cmdp.horizon}".encode("utf-8"))
        return digest.hexdigest()


def state_features_to_map(
    state_features: np.ndarray, names: Sequence[str], n_actions: int, name: str
) -> FeatureMap:
    """Diffuse des features d'état (S, d) sur toutes les actions."""
    values = np.repeat(state_features[:, None, :], n_actions, axis=1)
    return FeatureMap(tuple(names), values, name=name)


def deterministic_transitions(next_states: np.ndarray) -> sp.csr_matrix:
    """Matrice CSR (S·A, S) d'une dynamique déterministe donnée par next_states (S, A)."""
    n_states, n_actions = next_states.shape
    rows = np.arange(n_states * n_actions)
    return sp.csr_matrix(
        (np.ones(rows.size), (rows, next_states.ravel())),
        shape=(n_states * n_actions, n_states),
    )


class Grid2D:
    """
    Grille n×n sur [0, 1]² à dynamique déterministe.

    L'état (ix, iy) a l'indice ix·n + iy. Un déplacement vers une cellule
    bloquée ou hors grille laisse l'agent sur place.
    """

    def __init__(
        self, n: int, moves: Sequence[Tuple[int, int]], blocked: Optional[np.ndarray] = None
    ):
        if n < 5:
            raise ConfigurationError(f"grille trop petite: {n}")
        self.n = n
        self.moves = tuple(moves)
        if blocked is None:
            blocked = np.zeros((n, n), dtype=bool)
        self.blocked = np.asarray(blocked, dtype=bool)
        ix, iy = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        self.ix = ix.ravel()
        self.iy = iy.ravel()

    @property
    def n_states(self) -> int:
        return self.n * self.n

    @property
    def n_actions(self) -> int:
        return len(self.moves)

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return self.ix * self.spacing

    @property
    def y(self) -> np.ndarray:
        return self.iy * self.spacing

    def index(self, ix: int, iy: int) -> int:
        return int(ix) * self.n + int(iy)

    def coords(self, state: int) -> Tuple[int, int]:
        return int(state) // self.n, int(state) % self.n

    def next_states(self) -> np.ndarray:
        """Table (S, A) des états suivants."""
        table = np.zeros((self.n_states, self.n_actions), dtype=np.int64)
        for a, (dx, dy) in enumerate(self.moves):
            tx, ty = self.ix + dx, self.iy + dy
            inside = (tx >= 0) & (tx < self.n) & (ty >= 0) & (ty < self.n)
            tx_c, ty_c = np.clip(tx, 0, self.n - 1), np.clip(ty, 0, self.n - 1)
            allowed = inside & ~self.blocked[tx_c, ty_c] & ~self.blocked[self.ix, self.iy]
            table[:, a] = np.where(allowed, tx_c * self.n + ty_c, np.arange(self.n_states))
        return table

    def start_distribution(self, starts: Sequence[int]) -> np.ndarray:
        dist = np.zeros(self.n_states)
        dist[list(starts)] = 1.0 / len(starts)
        return dist


def check_feasibility(
    next_states: np.ndarray,
    cost_table: np.ndarray,
    starts: Sequence[int],
    goal_mask: np.ndarray,
    name: str,
):
    """
    Vérifie par parcours en largeur qu'un chemin sans violation relie chaque
    départ à un état but (dynamique déterministe).

    Raises:
        InfeasibleError: si un départ ne peut atteindre le but sans violation
    """
    safe_state = (cost_table == 0.0).any(axis=1)
    for start in starts:
        if not safe_state[start]:
            raise InfeasibleError(f"{name}: l'état de départ {start} viole la contrainte")
        seen = {int(start)}
        queue = deque([int(start)])
        reached = False
        while queue:
            s = queue.popleft()
            if goal_mask[s]:
                reached = True
                break
            for a in np.flatnonzero(cost_table[s] == 0.0):
                nxt = int(next_states[s, a])
                if nxt not in seen and safe_state[nxt]:
                    seen.add(nxt)
                    queue.append(nxt)
        if not reached:
            raise InfeasibleError(
                f"{name}: but inatteignable sans violation depuis l'état {start}"
            )


def make_instance(
    family: str,
    seed: int,
    spec: EnvSpec,
    next_states: np.ndarray,
    start_dist: np.ndarray,
    features: FeatureMap,
    expert_cost: LinearRewardModel,
    task_space: TaskRewardSpace,
    configurations: Tuple[Tuple[int, int], ...],
    discount: float,
    horizon: int,
    ground_truth: Optional[Tuple[LinearRewardModel, LinearRewardModel]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> EnvInstance:
    """Assemble une instance et vérifie sa faisabilité."""
    name = f"{family}-{seed}"
    cmdp = TabularCMDP(
        transition=deterministic_transitions(next_states),
        n_states=next_states.shape[0],
        n_actions=next_states.shape[1],
        start_dist=start_dist,
        discount=discount,
        horizon=horizon,
        name=name,
    )
    goal_mask = features.column(AT_GOAL)[:, 0] == 1.0
    starts = np.flatnonzero(start_dist > 0)
    check_feasibility(next_states, expert_cost.evaluate(features), starts, goal_mask, name)
    return EnvInstance(
        cmdp=cmdp,
        features=features,
        expert_reward=expert_reward_model(features.names),
        expert_cost=expert_cost,
        goal_states=frozenset(int(s) for s in np.flatnonzero(goal_mask)),
        name=name,
        seed=seed,
        family=family,
        spec=spec,
        task_space=task_space,
        configurations=configurations,
        ground_truth=ground_truth,
        metadata=metadata or {},
    )
