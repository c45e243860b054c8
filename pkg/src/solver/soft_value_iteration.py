"""
Itération de valeur entropique (soft value iteration) et politiques de Boltzmann.

Sauvegarde: Q(s, a) = r(s, a) + γ E_{s'}[V(s')], V(s) = log Σ_a exp Q(s, a).
La température est fixée à 1.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from config import settings
from src.core.types import FeatureMap, LinearRewardModel, TabularCMDP, _frozen
from src.exceptions import ConfigurationError, NumericalError, SolverError

# Plus petit double positif: plancher des probabilités
PROBABILITY_FLOOR = np.finfo(np.float64).tiny

RewardLike = Union[LinearRewardModel, np.ndarray]


@dataclass(frozen=True, eq=False)
class SoftQTable:
    """Table Q entropique et état de convergence."""

    values: np.ndarray
    discount: float
    converged: bool
    residual: float
    iterations: int = 0

    def __post_init__(self):
        values = _frozen(self.values)
        if not np.all(np.isfinite(values)):
            raise NumericalError("table Q non finie", {"residual": self.residual})
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class BoltzmannPolicy:
    """π(a|s) ∝ exp(Q(s, a)); toutes les probabilités sont > 0."""

    probs: np.ndarray
    log_probs: np.ndarray

    def __post_init__(self):
        probs = np.maximum(np.asarray(self.probs, dtype=np.float64), PROBABILITY_FLOOR)
        log_probs = np.asarray(self.log_probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape != log_probs.shape:
            raise ConfigurationError(f"politique de forme invalide: {probs.shape}")
        if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-10, rtol=0.0):
            raise SolverError("lignes de politique non normalisées")
        object.__setattr__(self, "probs", _frozen(probs))
        object.__setattr__(self, "log_probs", _frozen(log_probs))

    @classmethod
    def from_q(cls, q: np.ndarray) -> "BoltzmannPolicy":
        """Softmax ligne à ligne, stabilisée par log-sum-exp."""
        q = np.asarray(q, dtype=np.float64)
        log_probs = q - logsumexp(q, axis=1, keepdims=True)
        return cls(np.exp(log_probs), log_probs)

    @classmethod
    def uniform(cls, n_states: int, n_actions: int) -> "BoltzmannPolicy":
        return cls.from_q(np.zeros((n_states, n_actions)))

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    def entropy(self) -> np.ndarray:
        """Entropie par état."""
        return -np.sum(self.probs * self.log_probs, axis=1)


class SoftSolution(NamedTuple):
    """Résultat de soft_value_iteration: (Q, V, π)."""

    q: SoftQTable
    v: np.ndarray
    policy: BoltzmannPolicy


def as_reward_table(
    reward: RewardLike, cmdp: TabularCMDP, features: Optional[FeatureMap] = None
) -> np.ndarray:
    """
    Convertit une récompense (modèle linéaire ou table) en table (S, A).

    Raises:
        ConfigurationError: forme incompatible ou carte de features manquante
    """
    if isinstance(reward, LinearRewardModel):
        if features is None:
            raise ConfigurationError(
                "une carte de features est requise pour évaluer un modèle linéaire"
            )
        features.check_compatible(cmdp)
        table = reward.raw_values(features)
    else:
        table = np.asarray(reward, dtype=np.float64)
    if table.shape != (cmdp.n_states, cmdp.n_actions):
        raise ConfigurationError(
            f"table de récompense {table.shape} incompatible avec "
            f"{(cmdp.n_states, cmdp.n_actions)}"
        )
    if not np.all(np.isfinite(table)):
        raise NumericalError("récompense non finie")
    return table


def continuation_mask(cmdp: TabularCMDP) -> np.ndarray:
    """Masque (S, A): 0 pour les paires dont l'état est terminal (pas de suite)."""
    mask = np.ones((cmdp.n_states, cmdp.n_actions))
    if cmdp.terminal_states:
        mask[sorted(cmdp.terminal_states)] = 0.0
    return mask


def soft_backup(
    cmdp: TabularCMDP, reward: np.ndarray, v: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    """Une sauvegarde de Bellman entropique: r + γ E[V(s')]."""
    return reward + cmdp.discount * mask * cmdp.expected_next(v)


def soft_value_iteration(
    cmdp: TabularCMDP,
    reward: RewardLike,
    features: Optional[FeatureMap] = None,
    tolerance: Optional[float] = None,
    max_iterations: Optional[int] = None,
    init_q: Optional[np.ndarray] = None,
    finite_horizon: bool = False,
) -> SoftSolution:
    """
    Résout le problème entropique pour une récompense donnée.

    Args:
        cmdp: CMDP tabulaire
        reward: Modèle linéaire (avec `features`) ou table (S, A)
        features: Carte de features si `reward` est un modèle
        tolerance: Résidu de Bellman maximal (défaut: settings.solver_tolerance)
        max_iterations: Plafond d'itérations (défaut: settings.solver_max_iterations)
        init_q: Table Q de départ (démarrage à chaud)
        finite_horizon: Induction arrière exacte sur T pas; retourne Q au pas 0

    Returns:
        SoftSolution (Q, V, π)

    Raises:
        SolverError: divergence du résidu
    """
    table = as_reward_table(reward, cmdp, features)
    mask = continuation_mask(cmdp)

    if finite_horizon:
        v = np.zeros(cmdp.n_states)
        q = table
        for _ in range(cmdp.horizon):
            q = soft_backup(cmdp, table, v, mask)
            v = logsumexp(q, axis=1)
        soft_q = SoftQTable(q, cmdp.discount, True, 0.0, cmdp.horizon)
        return SoftSolution(soft_q, v, BoltzmannPolicy.from_q(q))

    if cmdp.discount >= 1.0 and not cmdp.terminal_states:
        raise ConfigurationError("γ = 1 sans état terminal: utiliser finite_horizon=True")

    tolerance = tolerance if tolerance is not None else settings.solver_tolerance
    max_iterations = max_iterations or settings.solver_max_iterations
    patience = settings.divergence_patience

    q = table.copy() if init_q is None else np.array(init_q, dtype=np.float64)
    residual = np.inf
    growing = 0
    converged = False
    iteration = 0

    for iteration in range(1, max_iterations + 1):
        v = logsumexp(q, axis=1)
        q_next = soft_backup(cmdp, table, v, mask)
        new_residual = float(np.max(np.abs(q_next - q)))
        if not np.isfinite(new_residual):
            raise NumericalError(
                "résidu non fini en itération de valeur", {"iteration": iteration}
            )

        growing = growing + 1 if new_residual > residual else 0
        if growing >= patience:
            raise SolverError(
                f"divergence: résidu croissant depuis {patience} itérations ({new_residual:.3e})"
            )

        q, residual = q_next, new_residual
        if residual <= tolerance:
            converged = True
            break

    if not converged:
        logger.warning(
            f"Itération de valeur non convergée après {max_iterations} itérations "
            f"(résidu {residual:.3e})"
        )

    v = logsumexp(q, axis=1)
    return SoftSolution(
        SoftQTable(q, cmdp.discount, converged, residual, iteration),
        v,
        BoltzmannPolicy.from_q(q),
    )


def boltzmann_policy(q: Union[SoftQTable, np.ndarray]) -> BoltzmannPolicy:
    """Politique de Boltzmann d'une table Q."""
    values = q.values if isinstance(q, SoftQTable) else q
    return BoltzmannPolicy.from_q(values)
