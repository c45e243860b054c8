"""
Paramètres globaux du projet TCL.

Valeurs par défaut des solveurs, environnements et expériences, surchargeables
par variables d'environnement TCL_* ou fichier .env.
"""

from .settings import Settings, get_settings, settings

__all__ = ["Settings", "get_settings", "settings"]
