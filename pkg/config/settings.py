"""
Configuration centrale du projet TCL (apprentissage de contraintes transférables).
"""

import os
from pathlib import Path
from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Configuration globale de l'application."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="TCL_",
        case_sensitive=False,
        extra="ignore",
    )

    # Chemins
    runs_dir: Path = Field(default_factory=lambda: Path(__file__).parent.parent / "data" / "runs")

    # Solveur entropique
    solver_tolerance: float = Field(default=1e-8, gt=0.0)
    solver_max_iterations: int = Field(default=10_000, gt=0)
    divergence_patience: int = Field(default=100, gt=0)

    # CMDP par défaut
    discount: float = Field(default=0.95, ge=0.0, lt=1.0)
    horizon: int = Field(default=100, gt=0)
    tray_positions: int = Field(default=21, ge=5)
    tray_tilt_bins: int = Field(default=13, ge=7)
    grid_size: int = Field(default=31, ge=5)
    expert_reward_scale: float = Field(default=10.0, gt=0.0)

    # RL contraint (relaxation lagrangienne)
    crl_step_size: float = Field(default=0.05, gt=0.0)
    crl_lambda_init: float = Field(default=0.0, ge=0.0)
    crl_lambda_max: float = Field(default=1e3, gt=0.0)
    crl_dual_tolerance: float = Field(default=1e-3, gt=0.0)
    crl_lambda_change_tolerance: float = Field(default=1e-6, gt=0.0)
    crl_max_iterations: int = Field(default=2000, gt=0)

    # Démonstrations expertes
    demo_count: int = Field(default=32, gt=0)
    demo_dual_step_size: float = Field(default=2.0, gt=0.0)
    demo_cost_tolerance: float = Field(default=1e-3, gt=0.0)
    demo_max_rejection_rate: float = Field(default=0.99, gt=0.0, lt=1.0)

    # Apprentissage TCL
    irl_step_size: float = Field(default=0.1, gt=0.0)
    rd_step_size: float = Field(default=0.05, gt=0.0)
    outer_iterations: int = Field(default=200, gt=0)
    decomposition_interval: int = Field(default=10, gt=0)
    rd_alpha: float = Field(default=1.0, ge=0.0)
    rd_max_iterations: int = Field(default=200, gt=0)
    rd_stagnation_patience: int = Field(default=50, gt=0)
    tie_break_epsilon: float = Field(default=1e-6, ge=0.0)
    irl_tolerance: float = Field(default=1e-2, gt=0.0)
    rd_tolerance: float = Field(default=1e-6, gt=0.0)
    task_weight_bound: float = Field(default=1e3, gt=0.0)

    # Évaluation
    eval_count: int = Field(default=100, gt=0)
    correlation_samples: int = Field(default=1000, gt=0)
    eval_rollouts: int = Field(default=4, gt=0)
    # Processus de `tcl experiment` quand ni --jobs ni experiment.jobs ne sont fournis
    jobs: int = Field(default_factory=lambda: os.cpu_count() or 1, gt=0)

    # Logging
    log_level: str = Field(default="INFO")
    log_file: Optional[Path] = Field(default=None)
    diagnostics_enabled: bool = Field(default=True)


settings = Settings()


def get_settings() -> Settings:
    """Retourne l'instance de configuration globale."""
    return settings
