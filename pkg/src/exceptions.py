"""
Hiérarchie d'exceptions du projet TCL.

Chaque catégorie porte le code de sortie utilisé par la CLI.
"""

from typing import Any, Dict, Iterable, Optional


class TclError(Exception):
    """Erreur de base du projet."""

    exit_code: int = 1


class ConfigurationError(TclError, ValueError):
    """Paramètres ou document de configuration invalides."""

    exit_code = 2


class ArgumentError(TclError, ValueError):
    """Argument invalide passé à une opération (ensemble vide, famille inconnue...)."""

    exit_code = 2


class UndefinedCorrelationError(ArgumentError):
    """Corrélation indéfinie: variance nulle dans un des échantillons."""


class InfeasibleError(TclError):
    """Problème contraint infaisable (λ au-delà de λ_max, rejet des démonstrations...)."""

    exit_code = 3


class SolverError(TclError):
    """Échec d'un solveur numérique (divergence, non-convergence)."""

    exit_code = 4


class NumericalError(SolverError):
    """Valeur non finie rencontrée pendant une optimisation."""

    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.state = state or {}


class InvariantViolationError(TclError):
    """Violation d'un invariant de domaine (coût négatif, probabilités invalides)."""

    exit_code = 4


class FeatureMismatchError(ConfigurationError):
    """Noms de features introuvables dans la carte de features cible."""

    exit_code = 5

    def __init__(self, missing: Iterable[str], context: str = ""):
        self.missing = sorted(set(missing))
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}features introuvables: {', '.join(self.missing)}")
