"""Types de domaine et fonctionnelles de trajectoire."""

from .types import (
    CostModel,
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    TaskRewardSpace,
    Trajectory,
    cost_from_residual,
)
from .functionals import (
    cumulative_cost,
    discounted_return,
    feature_expectations,
    trajectory_feature_sum,
    validate_trajectory,
)

__all__ = [
    "CostModel",
    "DemoSet",
    "FeatureMap",
    "LinearRewardModel",
    "RewardKind",
    "TabularCMDP",
    "TaskRewardSpace",
    "Trajectory",
    "cost_from_residual",
    "cumulative_cost",
    "discounted_return",
    "feature_expectations",
    "trajectory_feature_sum",
    "validate_trajectory",
]
