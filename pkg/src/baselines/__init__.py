"""Méthodes de référence: plages de features (FC) et ICRL à tâche connue."""

from .feature_constraint import FeatureBoxCost, fc_constraint
from .icrl import icrl_like

__all__ = ["FeatureBoxCost", "fc_constraint", "icrl_like"]
