"""
Mesures d'occupation (fréquences de visite) par récursion avant.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.types import FeatureMap, TabularCMDP, _frozen
from src.solver.soft_value_iteration import BoltzmannPolicy, continuation_mask
from src.exceptions import ConfigurationError


@dataclass(frozen=True, eq=False)
class OccupancyMeasure:
    """
    Visites cumulées sur l'horizon: Σ_t w_t μ_t(s, a), avec w_t = γ^t si
    `discounted`, sinon 1.
    """

    state_action: np.ndarray
    discounted: bool
    horizon: int
    discount: float

    def __post_init__(self):
        values = _frozen(self.state_action)
        if values.min() < -1e-12:
            raise ConfigurationError("occupation négative")
        object.__setattr__(self, "state_action", values)

    @property
    def states(self) -> np.ndarray:
        return self.state_action.sum(axis=1)

    @property
    def total(self) -> float:
        return float(self.state_action.sum())

    @property
    def expected_total(self) -> float:
        """Masse attendue sans état terminal: Σ_t w_t."""
        if not self.discounted:
            return float(self.horizon)
        return float(np.sum(np.power(self.discount, np.arange(self.horizon))))

    def normalized_states(self) -> np.ndarray:
        """μ̂: marginale d'état normalisée à 1."""
        states = self.states
        return states / states.sum()

    def expectation(self, table: np.ndarray) -> float:
        """Σ_{s,a} μ(s, a) table(s, a)."""
        return float(np.sum(self.state_action * table))

    def feature_expectations(self, features: FeatureMap) -> np.ndarray:
        """Σ_{s,a} μ(s, a) φ(s, a), vecteur de dimension d."""
        return np.einsum("sa,sad->d", self.state_action, features.values)


def occupancy(
    cmdp: TabularCMDP,
    policy: BoltzmannPolicy,
    discounted: bool = True,
    horizon: Optional[int] = None,
    start_dist: Optional[np.ndarray] = None,
) -> OccupancyMeasure:
    """
    Occupation d'une politique: μ_{t+1}(s') = Σ_{s,a} μ_t(s) π(a|s) T(s, a, s').

    La masse atteignant un état terminal y est comptée une fois puis retirée.

    Args:
        cmdp: CMDP tabulaire
        policy: Politique évaluée
        discounted: Pondérer le pas t par γ^t (sinon somme brute)
        horizon: Nombre de pas (défaut: cmdp.horizon)
        start_dist: Distribution initiale (défaut: cmdp.start_dist)

    Returns:
        OccupancyMeasure
    """
    if policy.probs.shape != (cmdp.n_states, cmdp.n_actions):
        raise ConfigurationError("politique incompatible avec le CMDP")
    horizon = horizon or cmdp.horizon
    state_dist = np.array(cmdp.start_dist if start_dist is None else start_dist, dtype=np.float64)
    mask = continuation_mask(cmdp)
    weight = 1.0
    accumulated = np.zeros((cmdp.n_states, cmdp.n_actions))

    for _ in range(horizon):
        step = state_dist[:, None] * policy.probs
        accumulated += weight * step
        state_dist = cmdp.transition_t @ (step * mask).ravel()
        if discounted:
            weight *= cmdp.discount

    return OccupancyMeasure(accumulated, discounted, horizon, cmdp.discount)
