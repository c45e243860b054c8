"""
Configuration des sinks loguru.
"""

import sys
from pathlib import Path
from typing import Optional
from loguru import logger

from config import settings

_configured = False


def configure_logging(
    level: Optional[str] = None, log_file: Optional[Path] = None, force: bool = False
):
    """
    Installe les sinks loguru (stderr + fichier optionnel).

    Args:
        level: Niveau de log (par défaut: settings.log_level)
        log_file: Fichier de log optionnel (par défaut: settings.log_file)
        force: Réinstaller les sinks même s'ils sont déjà configurés
    """
    global _configured
    if _configured and not force:
        return

    level = level or settings.log_level
    log_file = log_file or settings.log_file

    logger.remove()
    logger.add(sys.stderr, level=level)
    if log_file:
        logger.add(str(log_file), level=level, rotation="10 MB", encoding="utf-8")

    _configured = True
    logger.debug(f"Logging configuré (niveau={level}, fichier={log_file})")
