"""
Métriques d'évaluation: taux de violation, taux de succès et corrélation
entre récompenses décomposées.
"""

from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy.stats import pearsonr

from src.core.types import CostModel, FeatureMap, LinearRewardModel, RewardKind, Trajectory
from src.envs.common import EnvInstance
from src.exceptions import ArgumentError, UndefinedCorrelationError
from src.utils.seeding import substream

ModelLike = Union[LinearRewardModel, CostModel]


def _cost_table(c_E: ModelLike, features: FeatureMap) -> np.ndarray:
    if isinstance(c_E, LinearRewardModel) and c_E.kind is not RewardKind.COST:
        return c_E.raw_values(features)
    return c_E.evaluate(features)


def count_violations(
    trajs: Sequence[Trajectory], c_E: ModelLike, features: FeatureMap
) -> Tuple[int, int]:
    """(pas violants, pas totaux) sur une liste de trajectoires."""
    table = _cost_table(c_E, features)
    violations = sum(int(np.count_nonzero(table[t.states, t.actions] > 0.0)) for t in trajs)
    return violations, sum(len(t) for t in trajs)


def violation_rate(trajs: Sequence[Trajectory], c_E: ModelLike, features: FeatureMap) -> float:
    """
    Pas violants / pas totaux, cumulés sur toutes les trajectoires.

    Args:
        trajs: Trajectoires
        c_E: Coût indicateur
        features: Carte de features de l'environnement des trajectoires

    Returns:
        Taux dans [0, 1]
    """
    if not trajs:
        raise ArgumentError("liste de trajectoires vide")
    violations, steps = count_violations(trajs, c_E, features)
    if steps == 0:
        raise ArgumentError("trajectoires sans aucun pas")
    return violations / steps


def reached_goal(traj: Trajectory, env: EnvInstance) -> bool:
    return bool(env.goal_mask[traj.visited_states()].any())


def success_rate(trajs: Sequence[Trajectory], env: EnvInstance) -> Tuple[float, float]:
    """
    (succès, complétion du but): un succès atteint le but sans aucun pas violant.

    Args:
        trajs: Trajectoires issues de env
        env: Instance d'environnement

    Returns:
        (success, goal_completion)
    """
    if not trajs:
        raise ArgumentError("liste de trajectoires vide")
    table = env.cost_table()
    reached = np.array([reached_goal(t, env) for t in trajs])
    clean = np.array([not np.any(table[t.states, t.actions] > 0.0) for t in trajs])
    return float(np.mean(reached & clean)), float(np.mean(reached))


def residual_values(model: ModelLike, features: FeatureMap) -> np.ndarray:
    """
    Valeurs de récompense résiduelle d'un modèle: r pour un modèle de
    récompense, −c pour un modèle de coût (linéaire non tronqué ou non).
    """
    if isinstance(model, LinearRewardModel):
        values = model.raw_values(features)
        return -values if model.kind is RewardKind.COST else values
    return -model.evaluate(features)


def sample_pairs(env: EnvInstance, count: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Paires (s, a) tirées uniformément dans une instance."""
    rng = substream(seed, "correlation", env.name)
    flat = rng.integers(0, env.cmdp.n_states * env.cmdp.n_actions, size=count)
    return flat // env.cmdp.n_actions, flat % env.cmdp.n_actions


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise UndefinedCorrelationError("corrélation indéfinie: variance nulle")
    return float(np.clip(pearsonr(x, y)[0], -1.0, 1.0))


def correlation_samples(
    model: ModelLike,
    reference: ModelLike,
    envs: Sequence[EnvInstance],
    samples_per_env: int,
    seed: int,
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Échantillons appariés (modèle, référence) par instance."""
    if not envs:
        raise ArgumentError("liste d'environnements vide")
    if samples_per_env < 2:
        raise ArgumentError("au moins 2 échantillons par environnement")
    samples = []
    for env in envs:
        states, actions = sample_pairs(env, samples_per_env, seed)
        x = residual_values(model, env.features)[states, actions]
        y = residual_values(reference, env.features)[states, actions]
        samples.append((x, y))
    return samples


def decomposition_correlation(
    model_r_c: ModelLike,
    reference: ModelLike,
    envs: Sequence[EnvInstance],
    samples_per_env: int,
    seed: int,
) -> float:
    """
    Corrélation de Pearson entre deux récompenses sur des paires (s, a)
    tirées uniformément dans chaque instance puis regroupées.

    Raises:
        UndefinedCorrelationError: variance nulle dans un des échantillons
    """
    samples = correlation_samples(model_r_c, reference, envs, samples_per_env, seed)
    x = np.concatenate([s[0] for s in samples])
    y = np.concatenate([s[1] for s in samples])
    return _pearson(x, y)


def per_environment_correlations(
    model_r_c: ModelLike,
    reference: ModelLike,
    envs: Sequence[EnvInstance],
    samples_per_env: int,
    seed: int,
) -> List[float]:
    """Corrélation par instance (NaN si indéfinie)."""
    values = []
    for x, y in correlation_samples(model_r_c, reference, envs, samples_per_env, seed):
        try:
            values.append(_pearson(x, y))
        except UndefinedCorrelationError:
            values.append(float("nan"))
    return values
