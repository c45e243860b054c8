"""
IRL à entropie causale maximale pour des récompenses linéaires.

Objectif L(w) = w · φ̄_D − Σ_s p_0(s) V_w(s), de gradient φ̄_D − E_π[Σ_t γ^t φ].
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from src.core.functionals import feature_expectations
from src.core.types import DemoSet, FeatureMap, LinearRewardModel, TabularCMDP
from src.exceptions import NumericalError
from src.learning.config import TclConfig
from src.solver import BoltzmannPolicy, SoftSolution, occupancy, soft_value_iteration

ARMIJO_FRACTION = 1e-4


@dataclass(frozen=True, eq=False)
class IrlState:
    """Récompense courante, solution entropique et écart de moments."""

    reward: LinearRewardModel
    solution: SoftSolution
    expert_features: np.ndarray
    policy_features: np.ndarray
    objective: float
    step_size: float
    accepted: bool = True

    @property
    def policy(self) -> BoltzmannPolicy:
        return self.solution.policy

    @property
    def feature_gap(self) -> np.ndarray:
        return self.expert_features - self.policy_features

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.feature_gap)))

    @property
    def merit(self) -> float:
        return float(self.feature_gap @ self.feature_gap)


def evaluate_reward(
    cmdp: TabularCMDP,
    features: FeatureMap,
    reward: LinearRewardModel,
    expert_features: np.ndarray,
    step_size: float,
    init_q: Optional[np.ndarray] = None,
) -> IrlState:
    """
    Résout le problème entropique pour `reward` et mesure l'écart de moments.

    Raises:
        NumericalError: gradient non fini
    """
    solution = soft_value_iteration(cmdp, reward, features, init_q=init_q)
    occ = occupancy(cmdp, solution.policy, discounted=True)
    policy_features = occ.feature_expectations(features)[features.resolve(reward.feature_names)]
    objective = float(reward.weights @ expert_features - cmdp.start_dist @ solution.v)
    gap = expert_features - policy_features
    if not (np.all(np.isfinite(gap)) and np.isfinite(objective)):
        raise NumericalError(
            "gradient IRL non fini",
            {"weights": reward.weights.tolist(), "gap": gap.tolist(), "objective": objective},
        )
    return IrlState(reward, solution, expert_features, policy_features, objective, step_size)


def expert_feature_expectations(
    demos: DemoSet, features: FeatureMap, reward: LinearRewardModel, gamma: float
) -> np.ndarray:
    """φ̄_D restreint aux features du modèle, dans son ordre."""
    return feature_expectations(demos, features, gamma)[features.resolve(reward.feature_names)]


def irl_step(
    r: LinearRewardModel,
    demos: DemoSet,
    cmdp: TabularCMDP,
    features: FeatureMap,
    step_size: Optional[float] = None,
    previous: Optional[IrlState] = None,
    line_search: bool = True,
    free_mask: Optional[np.ndarray] = None,
    config: Optional[TclConfig] = None,
) -> IrlState:
    """
    Un pas de montée sur les poids: w ← w + η (φ̄_D − E_π[φ]), puis π
    recalculée sur la récompense mise à jour.

    Avec line_search, η est divisé par 2 jusqu'à ce que l'objectif L(w) =
    w·φ̄_D − E_{s0}[V_w(s0)] vérifie la condition d'Armijo; le pas suivant
    repart de 2η.

    Args:
        r: Récompense courante
        demos: Démonstrations expertes
        cmdp: CMDP tabulaire
        features: Carte de features
        step_size: Pas η (défaut: previous.step_size ou config.irl_step_size)
        previous: État IRL déjà évalué en r (évite une résolution)
        line_search: Recherche linéaire d'Armijo sur L (sinon pas fixe η)
        free_mask: Dimensions modifiables (les autres restent fixes)
        config: Configuration TCL

    Returns:
        IrlState au nouveau point (ou au point courant si aucun pas n'est accepté)
    """
    config = config or TclConfig()
    current = previous
    if current is None or current.reward is not r:
        expert = expert_feature_expectations(demos, features, r, cmdp.discount)
        current = evaluate_reward(cmdp, features, r, expert, step_size or config.irl_step_size)
    eta = step_size if step_size is not None else current.step_size

    direction = current.feature_gap.copy()
    if free_mask is not None:
        direction[~np.asarray(free_mask, dtype=bool)] = 0.0
    if not np.any(direction):
        return IrlState(r, current.solution, current.expert_features, current.policy_features,
                        current.objective, eta, accepted=True)

    for _ in range(config.max_backtracks if line_search else 1):
        candidate = LinearRewardModel(r.weights + eta * direction, r.feature_names, r.kind)
        state = evaluate_reward(cmdp, features, candidate, current.expert_features, eta,
                                init_q=current.solution.q.values)
        # condition d'Armijo: montée suffisante de L le long de la direction
        ascent = float(direction @ current.feature_gap)
        required = current.objective + ARMIJO_FRACTION * eta * ascent
        if not line_search or state.objective >= required:
            next_eta = 2.0 * eta if line_search else eta
            return IrlState(
                state.reward, state.solution, state.expert_features, state.policy_features,
                state.objective, next_eta, accepted=True,
            )
        eta *= 0.5

    logger.debug(f"IRL: aucun pas accepté (écart max {current.max_gap:.3e})")
    return IrlState(r, current.solution, current.expert_features, current.policy_features,
                    current.objective, eta, accepted=False)
