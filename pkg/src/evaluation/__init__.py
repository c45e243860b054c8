"""
Module d'évaluation: métriques de transfert et orchestration des expériences.
"""

from src.evaluation.metrics import (
    count_violations,
    decomposition_correlation,
    per_environment_correlations,
    residual_values,
    success_rate,
    violation_rate,
)
from src.evaluation.experiment import (
    LearnedConstraint,
    ReportBundle,
    TransferEvaluator,
    learn_constraint,
    run_experiment,
    task_reward,
    transfer_policy,
)

__all__ = [
    "count_violations",
    "decomposition_correlation",
    "per_environment_correlations",
    "residual_values",
    "success_rate",
    "violation_rate",
    "LearnedConstraint",
    "ReportBundle",
    "TransferEvaluator",
    "learn_constraint",
    "run_experiment",
    "task_reward",
    "transfer_policy",
]
