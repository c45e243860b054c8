"""
Module d'observabilité: diagnostics par itération et compteurs d'avertissements.
"""

from src.observability.diagnostics import (
    DiagnosticsRecorder,
    count_warning,
    reset_warning_counts,
    warning_counts,
)

__all__ = ["DiagnosticsRecorder", "count_warning", "reset_warning_counts", "warning_counts"]
