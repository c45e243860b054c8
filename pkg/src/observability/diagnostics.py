"""
Diagnostics numériques: enregistrement append-only des itérations et
compteurs d'avertissements.
"""

from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Optional
from loguru import logger
import pandas as pd

from config import settings


class DiagnosticsRecorder:
    """
    Enregistreur de lignes de diagnostic (une ligne par itération).

    Les lignes sont seulement ajoutées, jamais modifiées; l'export se fait
    via pandas.
    """

    def __init__(self, name: str = "diagnostics", enabled: Optional[bool] = None):
        """
        Initialise l'enregistreur.

        Args:
            name: Nom du canal (utilisé dans les logs)
            enabled: Activer l'enregistrement (par défaut: settings.diagnostics_enabled)
        """
        self.name = name
        self.enabled = enabled if enabled is not None else settings.diagnostics_enabled
        self._rows: List[Dict[str, Any]] = []

    def record(self, **row: Any):
        """Ajoute une ligne de diagnostic."""
        if not self.enabled:
            return
        self._rows.append(dict(row))

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return list(self._rows)

    def last(self) -> Optional[Dict[str, Any]]:
        return dict(self._rows[-1]) if self._rows else None

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(self._rows)

    def write_csv(self, path: Path) -> Path:
        """
        Écrit les diagnostics au format CSV.

        Args:
            path: Fichier de sortie

        Returns:
            Chemin écrit
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_dataframe().to_csv(path, index=False)
        logger.debug(f"Diagnostics '{self.name}' écrits dans {path} ({len(self)} lignes)")
        return path


# Compteur global des avertissements (coûts tronqués, stagnations...)
warning_counts: Counter = Counter()


def count_warning(kind: str, amount: int = 1):
    """Incrémente le compteur d'avertissements `kind`."""
    warning_counts[kind] += amount


def reset_warning_counts():
    """Remet les compteurs à zéro (utile pour les tests)."""
    warning_counts.clear()
