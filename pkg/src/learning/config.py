"""
Configuration de l'apprentissage TCL.
"""

from typing import Literal

from pydantic import BaseModel, Field, field_validator

from config import settings

RD_MODES = ("exact", "approximate")
STEP_SCHEDULES = ("backtracking", "inverse_sqrt")


class TclConfig(BaseModel):
    """Paramètres de l'alternance IRL / décomposition."""

    irl_step_size: float = Field(default_factory=lambda: settings.irl_step_size, gt=0.0)
    rd_step_size: float = Field(default_factory=lambda: settings.rd_step_size, gt=0.0)
    outer_iterations: int = Field(default_factory=lambda: settings.outer_iterations, gt=0)
    decomposition_interval: int = Field(
        default_factory=lambda: settings.decomposition_interval, gt=0
    )
    rd_mode: Literal["exact", "approximate"] = "exact"
    alpha: float = Field(default_factory=lambda: settings.rd_alpha, ge=0.0)
    step_schedule: Literal["backtracking", "inverse_sqrt"] = "backtracking"
    irl_tolerance: float = Field(default_factory=lambda: settings.irl_tolerance, gt=0.0)
    rd_tolerance: float = Field(default_factory=lambda: settings.rd_tolerance, gt=0.0)
    rd_max_iterations: int = Field(default_factory=lambda: settings.rd_max_iterations, gt=0)
    stagnation_patience: int = Field(default_factory=lambda: settings.rd_stagnation_patience, gt=0)
    tie_break_epsilon: float = Field(default_factory=lambda: settings.tie_break_epsilon, ge=0.0)
    max_backtracks: int = Field(default=30, gt=0)

    @field_validator("rd_mode", mode="before")
    @classmethod
    def normalize_rd_mode(cls, value):
        return "approximate" if value == "approx" else value
