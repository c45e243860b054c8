"""
Fonctionnelles de trajectoire: retour actualisé R(τ), coût cumulé C(τ) et
espérances empiriques de features.
"""

from typing import Union

import numpy as np

from src.core.types import (
    CostModel,
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    Trajectory,
)
from src.exceptions import ArgumentError, ConfigurationError, InvariantViolationError


def discount_weights(length: int, gamma: float) -> np.ndarray:
    """Poids γ^t pour t = 0..length-1."""
    if not 0.0 <= gamma <= 1.0:
        raise ConfigurationError(f"gamma hors de [0, 1]: {gamma}")
    return np.power(gamma, np.arange(length, dtype=np.float64))


def discounted_return(
    traj: Trajectory, r: LinearRewardModel, features: FeatureMap, gamma: float
) -> float:
    """
    Retour actualisé R(τ) = Σ_t γ^t r(s_t, a_t), avec t partant de 0.

    Args:
        traj: Trajectoire non vide
        r: Modèle de récompense
        features: Carte de features du CMDP de la trajectoire
        gamma: Facteur d'actualisation

    Returns:
        Retour actualisé
    """
    if len(traj) == 0:
        raise ArgumentError("trajectoire vide")
    table = r.raw_values(features)
    rewards = table[traj.states, traj.actions]
    return float(discount_weights(len(traj), gamma) @ rewards)


def cumulative_cost(
    traj: Trajectory, c: Union[LinearRewardModel, CostModel], features: FeatureMap
) -> float:
    """
    Coût cumulé non actualisé C(τ) = Σ_t c(s_t, a_t).

    Raises:
        ConfigurationError: si `c` est un modèle linéaire qui n'est pas un coût
        InvariantViolationError: si un coût évalué est négatif
    """
    if isinstance(c, LinearRewardModel) and c.kind is not RewardKind.COST:
        raise ConfigurationError(f"modèle de type '{c.kind.value}' utilisé comme coût")
    table = c.evaluate(features)
    costs = table[traj.states, traj.actions]
    if costs.size and costs.min() < 0.0:
        raise InvariantViolationError("coût négatif dans la trajectoire")
    return float(costs.sum())


def trajectory_feature_sum(traj: Trajectory, features: FeatureMap, gamma: float) -> np.ndarray:
    """Σ_t γ^t φ(s_t, a_t) pour une trajectoire."""
    phi = features.values[traj.states, traj.actions]
    return discount_weights(len(traj), gamma) @ phi


def feature_expectations(demos: DemoSet, features: FeatureMap, gamma: float) -> np.ndarray:
    """
    Espérance empirique actualisée des features (1/N) Σ_i Σ_t γ^t φ(s_t, a_t).

    Args:
        demos: Démonstrations
        features: Carte de features
        gamma: Facteur d'actualisation

    Returns:
        Vecteur de dimension d
    """
    if demos is None or len(demos) == 0:
        raise ArgumentError("ensemble de démonstrations vide")
    sums = np.stack([trajectory_feature_sum(t, features, gamma) for t in demos])
    return sums.mean(axis=0)


def validate_trajectory(traj: Trajectory, cmdp: TabularCMDP):
    """
    Vérifie que chaque transition de la trajectoire a une probabilité > 0.

    Raises:
        InvariantViolationError: transition impossible ou indices hors bornes
    """
    states = traj.visited_states()
    if states.size and (states.min() < 0 or states.max() >= cmdp.n_states):
        raise InvariantViolationError("état hors bornes dans la trajectoire")
    if traj.actions.size and (traj.actions.min() < 0 or traj.actions.max() >= cmdp.n_actions):
        raise InvariantViolationError("action hors bornes dans la trajectoire")

    rows = traj.states[:-1] * cmdp.n_actions + traj.actions[:-1]
    nexts = traj.states[1:]
    if traj.final_state is not None and len(traj):
        rows = np.append(rows, traj.states[-1] * cmdp.n_actions + traj.actions[-1])
        nexts = np.append(nexts, traj.final_state)
    if rows.size == 0:
        return
    probs = np.asarray(cmdp.transition[rows, nexts]).ravel()
    bad = np.flatnonzero(probs <= 0.0)
    if bad.size:
        t = int(bad[0])
        raise InvariantViolationError(
            f"transition impossible au pas {t}: état {int(nexts[t])} inatteignable"
        )
