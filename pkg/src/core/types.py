"""
Types de domaine partagés: CMDP tabulaire, cartes de features, modèles de
récompense linéaires, espace des récompenses de tâche, trajectoires.

Tous les types sont immuables après construction.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np
import scipy.sparse as sp
from loguru import logger

from src.exceptions import (
    ArgumentError,
    ConfigurationError,
    FeatureMismatchError,
    InvariantViolationError,
)
from src.observability.diagnostics import count_warning

PROBABILITY_TOLERANCE = 1e-12
COST_TOLERANCE = 1e-12


def _frozen(array: np.ndarray, dtype=np.float64) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


class RewardKind(str, Enum):
    """Rôle d'un modèle linéaire."""

    OVERALL = "overall"
    TASK = "task"
    RESIDUAL = "residual"
    COST = "cost"


@dataclass(frozen=True, eq=False)
class TabularCMDP:
    """
    CMDP tabulaire (sans fonction de récompense ni de coût).

    La transition est stockée en CSR de forme (S·A, S): la ligne s·A + a
    contient la distribution de s' sachant (s, a).
    """

    transition: sp.csr_matrix
    n_states: int
    n_actions: int
    start_dist: np.ndarray
    discount: float
    horizon: int
    terminal_states: frozenset = field(default_factory=frozenset)
    name: str = "cmdp"

    def __post_init__(self):
        if self.n_states <= 0 or self.n_actions <= 0:
            raise ConfigurationError("n_states et n_actions doivent être positifs")
        if not 0.0 <= self.discount <= 1.0:
            raise ConfigurationError(f"discount hors de [0, 1]: {self.discount}")
        if self.horizon <= 0:
            raise ConfigurationError(f"horizon doit être positif: {self.horizon}")

        matrix = sp.csr_matrix(self.transition, dtype=np.float64)
        matrix.sum_duplicates()
        matrix.sort_indices()
        if matrix.shape != (self.n_states * self.n_actions, self.n_states):
            raise ConfigurationError(
                f"transition de forme {matrix.shape}, attendu "
                f"{(self.n_states * self.n_actions, self.n_states)}"
            )
        object.__setattr__(self, "transition", matrix)
        object.__setattr__(self, "start_dist", _frozen(self.start_dist))
        object.__setattr__(self, "terminal_states", frozenset(int(s) for s in self.terminal_states))
        self._validate()

    def _validate(self):
        data = self.transition.data
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise InvariantViolationError("probabilités de transition hors de [0, 1]")
        row_sums = np.asarray(self.transition.sum(axis=1)).ravel()
        worst = np.max(np.abs(row_sums - 1.0))
        if worst > PROBABILITY_TOLERANCE:
            raise InvariantViolationError(
                f"lignes de transition non normalisées (écart {worst:.3e})"
            )

        if self.start_dist.shape != (self.n_states,):
            raise ConfigurationError("start_dist doit être un vecteur sur les états")
        if self.start_dist.min() < 0.0 or abs(self.start_dist.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise InvariantViolationError("start_dist n'est pas une distribution")

        for s in self.terminal_states:
            if not 0 <= s < self.n_states:
                raise ConfigurationError(f"état terminal invalide: {s}")
            rows = self.transition[s * self.n_actions:(s + 1) * self.n_actions, s].toarray().ravel()
            if not np.allclose(rows, 1.0, atol=PROBABILITY_TOLERANCE, rtol=0.0):
                raise InvariantViolationError(f"l'état terminal {s} ne boucle pas sur lui-même")

    @classmethod
    def from_dense(
        cls,
        transition: np.ndarray,
        start_dist: np.ndarray,
        discount: float,
        horizon: int,
        terminal_states: Iterable[int] = (),
        name: str = "cmdp",
    ) -> "TabularCMDP":
        """
        Construit un CMDP depuis un tenseur dense (s, a, s').

        Args:
            transition: Tenseur de probabilités (S, A, S)
            start_dist: Distribution initiale (S,)
            discount: Facteur d'actualisation γ
            horizon: Horizon T
            terminal_states: États absorbants
            name: Identifiant

        Returns:
            TabularCMDP
        """
        transition = np.asarray(transition, dtype=np.float64)
        if transition.ndim != 3 or transition.shape[0] != transition.shape[2]:
            raise ConfigurationError(f"tenseur de transition invalide: {transition.shape}")
        n_states, n_actions, _ = transition.shape
        return cls(
            transition=sp.csr_matrix(transition.reshape(n_states * n_actions, n_states)),
            n_states=n_states,
            n_actions=n_actions,
            start_dist=start_dist,
            discount=discount,
            horizon=horizon,
            terminal_states=frozenset(terminal_states),
            name=name,
        )

    @cached_property
    def transition_t(self) -> sp.csr_matrix:
        """Transposée (S, S·A), utilisée pour la propagation avant."""
        return self.transition.T.tocsr()

    def transition_tensor(self) -> np.ndarray:
        """Tenseur dense (S, A, S); réservé aux petits CMDP."""
        return self.transition.toarray().reshape(self.n_states, self.n_actions, self.n_states)

    def successors(self, state: int, action: int) -> Tuple[np.ndarray, np.ndarray]:
        """Retourne (états suivants, probabilités) pour (s, a)."""
        row = state * self.n_actions + action
        start, end = self.transition.indptr[row], self.transition.indptr[row + 1]
        return self.transition.indices[start:end], self.transition.data[start:end]

    def probability(self, state: int, action: int, next_state: int) -> float:
        return float(self.transition[state * self.n_actions + action, next_state])

    def expected_next(self, values: np.ndarray) -> np.ndarray:
        """E_{s'}[values(s')] pour chaque (s, a), forme (S, A)."""
        return (self.transition @ values).reshape(self.n_states, self.n_actions)


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Table dense de features φ(s, a) ∈ R^d avec noms uniques."""

    names: Tuple[str, ...]
    values: np.ndarray
    name: str = "features"

    def __post_init__(self):
        names = tuple(self.names)
        if len(set(names)) != len(names):
            raise ConfigurationError(f"noms de features dupliqués: {names}")
        values = _frozen(self.values)
        if values.ndim != 3 or values.shape[2] != len(names):
            raise ConfigurationError(
                f"values doit être (S, A, {len(names)}), reçu {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise InvariantViolationError("features non finies")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def n_states(self) -> int:
        return self.values.shape[0]

    @property
    def n_actions(self) -> int:
        return self.values.shape[1]

    @cached_property
    def _index(self) -> Dict[str, int]:
        return {n: i for i, n in enumerate(self.names)}

    def index(self, name: str) -> int:
        if name not in self._index:
            raise FeatureMismatchError([name], context=self.name)
        return self._index[name]

    def column(self, name: str) -> np.ndarray:
        """Table (S, A) d'une feature."""
        return self.values[:, :, self.index(name)]

    def resolve(self, names: Sequence[str]) -> np.ndarray:
        """
        Indices des noms donnés dans cette carte.

        Raises:
            FeatureMismatchError: si des noms sont introuvables
        """
        missing = [n for n in names if n not in self._index]
        if missing:
            raise FeatureMismatchError(missing, context=self.name)
        return np.array([self._index[n] for n in names], dtype=np.int64)

    def flat(self) -> np.ndarray:
        """Vue (S·A, d)."""
        return self.values.reshape(-1, self.dim)

    def check_compatible(self, cmdp: TabularCMDP):
        if self.values.shape[:2] != (cmdp.n_states, cmdp.n_actions):
            raise ConfigurationError(
                f"features {self.values.shape[:2]} incompatibles avec le CMDP "
                f"{(cmdp.n_states, cmdp.n_actions)}"
            )


@runtime_checkable
class CostModel(Protocol):
    """Tout modèle évaluable en table (S, A) sur une carte de features."""

    feature_names: Tuple[str, ...]

    def evaluate(self, features: FeatureMap) -> np.ndarray:
        ...


@dataclass(frozen=True, eq=False)
class LinearRewardModel:
    """
    Récompense (ou coût) linéaire r(s, a) = w · φ(s, a).

    Le modèle référence sa carte de features par ses noms; l'évaluation
    résout les noms dans la carte cible, ce qui permet le transfert.
    """

    weights: np.ndarray
    feature_names: Tuple[str, ...]
    kind: RewardKind = RewardKind.OVERALL
    clamp_nonnegative: bool = False

    def __post_init__(self):
        weights = _frozen(self.weights)
        names = tuple(self.feature_names)
        if weights.shape != (len(names),):
            raise ConfigurationError(f"{len(names)} features mais poids de forme {weights.shape}")
        if len(set(names)) != len(names):
            raise ConfigurationError(f"noms de features dupliqués: {names}")
        if not np.all(np.isfinite(weights)):
            raise InvariantViolationError("poids non finis")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "kind", RewardKind(self.kind))

    @classmethod
    def zeros(
        cls, feature_names: Sequence[str], kind: RewardKind = RewardKind.OVERALL
    ) -> "LinearRewardModel":
        return cls(np.zeros(len(feature_names)), tuple(feature_names), kind)

    @classmethod
    def from_dict(
        cls,
        weights: Dict[str, float],
        feature_names: Sequence[str],
        kind: RewardKind = RewardKind.OVERALL,
    ) -> "LinearRewardModel":
        """Construit un modèle depuis un dictionnaire {feature: poids} (absents = 0)."""
        unknown = set(weights) - set(feature_names)
        if unknown:
            raise FeatureMismatchError(unknown, context="poids")
        vector = np.array([float(weights.get(n, 0.0)) for n in feature_names])
        return cls(vector, tuple(feature_names), kind)

    def as_dict(self) -> Dict[str, float]:
        return {n: float(w) for n, w in zip(self.feature_names, self.weights)}

    def weight(self, name: str) -> float:
        return float(self.weights[self.feature_names.index(name)])

    def aligned_to(self, features: FeatureMap) -> "LinearRewardModel":
        """
        Réordonne les poids sur la carte `features` (features absentes du
        modèle: poids 0).

        Raises:
            FeatureMismatchError: si des features du modèle sont absentes de la carte
        """
        idx = features.resolve(self.feature_names)
        weights = np.zeros(features.dim)
        weights[idx] = self.weights
        return LinearRewardModel(weights, features.names, self.kind, self.clamp_nonnegative)

    def raw_values(self, features: FeatureMap) -> np.ndarray:
        """Table (S, A) de w · φ sans contrôle de signe."""
        idx = features.resolve(self.feature_names)
        return features.values[:, :, idx] @ self.weights

    def evaluate(self, features: FeatureMap) -> np.ndarray:
        """
        Évalue le modèle sur une carte de features.

        Pour kind=cost, les valeurs négatives sont tronquées à 0 si
        clamp_nonnegative, sinon elles lèvent InvariantViolationError.

        Args:
            features: Carte de features cible

        Returns:
            Table (S, A)
        """
        values = self.raw_values(features)
        if self.kind is RewardKind.COST:
            values = self._enforce_nonnegative(values)
        return values

    def _enforce_nonnegative(self, values: np.ndarray) -> np.ndarray:
        negative = values < -COST_TOLERANCE
        if negative.any():
            if not self.clamp_nonnegative:
                raise InvariantViolationError(
                    f"coût négatif (min {values.min():.3e}) "
                    f"sur {int(negative.sum())} paires (s, a)"
                )
            count = int(negative.sum())
            count_warning("cost_clamped", count)
            logger.warning(f"{count} coûts négatifs tronqués à 0 (min {values.min():.3e})")
        return np.maximum(values, 0.0)

    def with_kind(
        self, kind: RewardKind, clamp_nonnegative: Optional[bool] = None
    ) -> "LinearRewardModel":
        clamp = self.clamp_nonnegative if clamp_nonnegative is None else clamp_nonnegative
        return LinearRewardModel(self.weights, self.feature_names, kind, clamp)

    def scaled(self, factor: float) -> "LinearRewardModel":
        return LinearRewardModel(
            self.weights * factor, self.feature_names, self.kind, self.clamp_nonnegative
        )

    def _check_same_map(self, other: "LinearRewardModel"):
        if self.feature_names != other.feature_names:
            raise ConfigurationError("modèles définis sur des cartes de features différentes")

    def __add__(self, other: "LinearRewardModel") -> "LinearRewardModel":
        self._check_same_map(other)
        weights = self.weights + other.weights
        return LinearRewardModel(weights, self.feature_names, RewardKind.OVERALL)

    def __sub__(self, other: "LinearRewardModel") -> "LinearRewardModel":
        self._check_same_map(other)
        weights = self.weights - other.weights
        return LinearRewardModel(weights, self.feature_names, RewardKind.OVERALL)


def cost_from_residual(residual: LinearRewardModel) -> LinearRewardModel:
    """Coût c = -r_c, tronqué à 0 à l'évaluation."""
    return LinearRewardModel(
        -residual.weights, residual.feature_names, RewardKind.COST, clamp_nonnegative=True
    )


@dataclass(frozen=True, eq=False)
class TaskRewardSpace:
    """
    Espace R_p des récompenses de tâche: poids nuls hors de la base.

    Les features de `sign_constrained` (indicateurs de but) doivent garder un
    poids positif ou nul; tous les poids de base sont bornés par `weight_bound`.
    """

    feature_names: Tuple[str, ...]
    basis: Tuple[str, ...]
    sign_constrained: Tuple[str, ...] = ()
    weight_bound: float = 1e3

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "sign_constrained", tuple(self.sign_constrained))
        missing = [b for b in self.basis if b not in self.feature_names]
        if missing:
            raise FeatureMismatchError(missing, context="base de R_p")
        outside = [n for n in self.sign_constrained if n not in self.basis]
        if outside:
            raise ConfigurationError(f"features signées hors de la base: {outside}")
        if not self.basis:
            raise ConfigurationError("la base de R_p est vide")
        if self.weight_bound <= 0:
            raise ConfigurationError("weight_bound doit être positif")

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    @cached_property
    def basis_indices(self) -> np.ndarray:
        return np.array([self.feature_names.index(b) for b in self.basis], dtype=np.int64)

    @property
    def sign_constraint(self) -> bool:
        return bool(self.sign_constrained)

    @cached_property
    def basis_mask(self) -> np.ndarray:
        mask = np.zeros(self.dim, dtype=bool)
        mask[self.basis_indices] = True
        return mask

    @cached_property
    def lower_bounds(self) -> np.ndarray:
        """Bornes inférieures sur les poids de base (ordre de `basis`)."""
        return np.array(
            [0.0 if b in self.sign_constrained else -self.weight_bound for b in self.basis]
        )

    @cached_property
    def upper_bounds(self) -> np.ndarray:
        return np.full(len(self.basis), self.weight_bound)

    def project(self, weights: np.ndarray) -> np.ndarray:
        """Projection euclidienne exacte sur R_p (idempotente)."""
        weights = np.asarray(weights, dtype=np.float64)
        projected = np.zeros(self.dim)
        basis_weights = weights[self.basis_indices]
        projected[self.basis_indices] = np.clip(basis_weights, self.lower_bounds, self.upper_bounds)
        return projected

    def embed(self, basis_weights: np.ndarray) -> np.ndarray:
        """Vecteur complet à partir des poids de base."""
        full = np.zeros(self.dim)
        full[self.basis_indices] = basis_weights
        return full

    def contains(self, model: LinearRewardModel, atol: float = 0.0) -> bool:
        if model.feature_names != self.feature_names:
            return False
        off_basis = model.weights[~self.basis_mask]
        if off_basis.size and np.max(np.abs(off_basis)) > atol:
            return False
        signed = [self.feature_names.index(n) for n in self.sign_constrained]
        return bool(np.all(model.weights[signed] >= -atol))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Suite de paires (état, action) de longueur ≤ T.

    `final_state` est l'état atteint après la dernière action (optionnel).
    """

    states: np.ndarray
    actions: np.ndarray
    final_state: Optional[int] = None

    def __post_init__(self):
        states = _frozen(self.states, dtype=np.int64)
        actions = _frozen(self.actions, dtype=np.int64)
        if states.ndim != 1 or states.shape != actions.shape:
            raise ConfigurationError(
                "states et actions doivent être des vecteurs de même longueur"
            )
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "actions", actions)
        if self.final_state is not None:
            object.__setattr__(self, "final_state", int(self.final_state))

    def __len__(self) -> int:
        return int(self.states.shape[0])

    @property
    def steps(self) -> List[Tuple[int, int]]:
        return list(zip(self.states.tolist(), self.actions.tolist()))

    def visited_states(self) -> np.ndarray:
        """États visités, y compris l'état final s'il est connu."""
        if self.final_state is None:
            return self.states
        return np.append(self.states, self.final_state)


@dataclass(frozen=True, eq=False)
class DemoSet:
    """Démonstrations expertes D_E d'un même environnement."""

    trajectories: Tuple[Trajectory, ...]
    env_id: str

    def __post_init__(self):
        trajectories = tuple(self.trajectories)
        if not trajectories:
            raise ArgumentError("ensemble de démonstrations vide")
        object.__setattr__(self, "trajectories", trajectories)

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def state_actions(self) -> Tuple[np.ndarray, np.ndarray]:
        """Toutes les paires (s, a) concaténées."""
        states = np.concatenate([t.states for t in self.trajectories])
        actions = np.concatenate([t.actions for t in self.trajectories])
        return states, actions

    @property
    def total_steps(self) -> int:
        return sum(len(t) for t in self.trajectories)
