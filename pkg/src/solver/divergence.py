"""
Divergence KL entre politiques, pondérée par la visite des états.
"""

from typing import Union

import numpy as np

from src.exceptions import ConfigurationError
from src.solver.occupancy import OccupancyMeasure
from src.solver.soft_value_iteration import BoltzmannPolicy


def state_kl(policy_p: BoltzmannPolicy, policy: BoltzmannPolicy) -> np.ndarray:
    """KL(π_p(·|s) || π(·|s)) pour chaque état."""
    if policy_p.probs.shape != policy.probs.shape:
        raise ConfigurationError("politiques de formes différentes")
    return np.sum(policy_p.probs * (policy_p.log_probs - policy.log_probs), axis=1)


def kl_policy_divergence(
    policy_p: BoltzmannPolicy,
    policy: BoltzmannPolicy,
    mu: Union[OccupancyMeasure, np.ndarray],
) -> float:
    """
    Σ_s μ̂(s) KL(π_p(·|s) || π(·|s)), μ̂ étant la marginale d'état normalisée.

    Args:
        policy_p: Politique de tâche π_p
        policy: Politique totale π
        mu: Mesure d'occupation ou poids par état (normalisés ici)

    Returns:
        Divergence (≥ 0)
    """
    if isinstance(mu, OccupancyMeasure):
        weights = mu.normalized_states()
    else:
        weights = np.asarray(mu, dtype=np.float64)
        weights = weights / weights.sum()
    return float(max(0.0, weights @ state_kl(policy_p, policy)))
