"""
Contrôles de cohérence de la configuration globale.
"""

from typing import List
from loguru import logger

from config import settings
from src.exceptions import ConfigurationError

LOG_LEVELS = {"TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL"}


def collect_settings_errors() -> List[str]:
    """
    Liste les incohérences entre paramètres de la configuration globale.

    Les contraintes simples (bornes) sont déjà vérifiées par pydantic; on
    contrôle ici les contraintes croisées.

    Returns:
        Liste de messages d'erreur (vide si tout est cohérent)
    """
    errors = []

    if settings.tray_tilt_bins % 2 == 0:
        errors.append(
            f"tray_tilt_bins={settings.tray_tilt_bins} doit être impair (un bin centré sur 0°)"
        )
    if settings.crl_lambda_init > settings.crl_lambda_max:
        errors.append("crl_lambda_init dépasse crl_lambda_max")
    if settings.decomposition_interval > settings.outer_iterations:
        errors.append("decomposition_interval dépasse outer_iterations")
    if settings.log_level.upper() not in LOG_LEVELS:
        errors.append(f"log_level inconnu: {settings.log_level}")

    return errors


def validate_settings() -> bool:
    """
    Valide la configuration globale.

    Returns:
        True si la configuration est cohérente, False sinon
    """
    errors = collect_settings_errors()
    for error in errors:
        logger.error(f"Configuration invalide: {error}")
    return not errors


def require_valid_settings():
    """
    Valide la configuration globale et lève une erreur si elle est incohérente.
    """
    errors = collect_settings_errors()
    if errors:
        raise ConfigurationError("; ".join(errors))
