"""RL contraint lagrangien et démonstrations expertes."""

from .lagrangian import (
    CrlConfig,
    LagrangeState,
    compute_threshold,
    cost_table_of,
    crl_summary,
    expected_cost,
    lagrangian_policy,
    solve_crl,
)
from .demos import expert_crl_config, generate_expert_demos, violating_steps

__all__ = [
    "CrlConfig",
    "LagrangeState",
    "compute_threshold",
    "cost_table_of",
    "crl_summary",
    "expected_cost",
    "lagrangian_policy",
    "solve_crl",
    "expert_crl_config",
    "generate_expert_demos",
    "violating_steps",
]
