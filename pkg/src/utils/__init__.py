"""Utilitaires transverses: logging, graines, validation."""

from src.utils.logging import configure_logging
from src.utils.seeding import derive_seed, substream
from src.utils.validation import (
    collect_settings_errors,
    require_valid_settings,
    validate_settings,
)

__all__ = [
    "configure_logging",
    "derive_seed",
    "substream",
    "collect_settings_errors",
    "require_valid_settings",
    "validate_settings",
]
