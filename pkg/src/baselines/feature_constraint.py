"""
Contrainte par plage de features (FC): chaque feature doit rester dans
l'intervalle [min, max] observé dans les démonstrations.
"""

from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from src.core.types import DemoSet, FeatureMap, _frozen
from src.exceptions import ArgumentError, ConfigurationError

BOX_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FeatureBoxCost:
    """
    Coût indicateur: 1 si une feature sort de sa boîte, 0 sinon.

    Les features absentes de la carte évaluée ne contraignent rien.
    """

    feature_names: Tuple[str, ...]
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        lower, upper = _frozen(self.lower), _frozen(self.upper)
        if lower.shape != (len(self.feature_names),) or upper.shape != lower.shape:
            raise ConfigurationError("bornes incompatibles avec les noms de features")
        if np.any(lower > upper):
            raise ConfigurationError("borne inférieure supérieure à la borne supérieure")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def evaluate(self, features: FeatureMap) -> np.ndarray:
        """Table (S, A) ∈ {0, 1}."""
        present = [i for i, n in enumerate(self.feature_names) if n in features.names]
        if not present:
            return np.zeros((features.n_states, features.n_actions))
        idx = features.resolve([self.feature_names[i] for i in present])
        values = features.values[:, :, idx]
        below = values < self.lower[present] - BOX_TOLERANCE
        outside = below | (values > self.upper[present] + BOX_TOLERANCE)
        return outside.any(axis=2).astype(float)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "feature_names": list(self.feature_names),
            "lower": [float(v) for v in self.lower],
            "upper": [float(v) for v in self.upper],
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "FeatureBoxCost":
        return cls(tuple(doc["feature_names"]), np.asarray(doc["lower"]), np.asarray(doc["upper"]))


def fc_constraint(demos: DemoSet, features: FeatureMap) -> FeatureBoxCost:
    """
    Boîte [min, max] de chaque feature sur toutes les paires (s, a) des démonstrations.

    Args:
        demos: Démonstrations
        features: Carte de features de l'environnement des démonstrations

    Returns:
        FeatureBoxCost
    """
    if demos is None or len(demos) == 0:
        raise ArgumentError("ensemble de démonstrations vide")
    states, actions = demos.state_actions()
    observed = features.values[states, actions]
    return FeatureBoxCost(features.names, observed.min(axis=0), observed.max(axis=0))
