"""
RL contraint par relaxation lagrangienne.

Alterne une résolution entropique sur la récompense composite
r(s, a) − λ (c(s, a) − ξ) et une montée duale
λ ← max(0, λ + η (E_π[c] − ξ)).
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, Field

from config import settings
from src.core.types import (
    CostModel,
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
)
from src.exceptions import ArgumentError, ConfigurationError, InfeasibleError
from src.solver import BoltzmannPolicy, as_reward_table, occupancy, soft_value_iteration


class CrlConfig(BaseModel):
    """Paramètres de la montée duale."""

    step_size: float = Field(default_factory=lambda: settings.crl_step_size, gt=0.0)
    lambda_init: float = Field(default_factory=lambda: settings.crl_lambda_init, ge=0.0)
    lambda_max: float = Field(default_factory=lambda: settings.crl_lambda_max, gt=0.0)
    dual_tolerance: float = Field(default_factory=lambda: settings.crl_dual_tolerance, gt=0.0)
    lambda_change_tolerance: float = Field(
        default_factory=lambda: settings.crl_lambda_change_tolerance, gt=0.0
    )
    max_iterations: int = Field(default_factory=lambda: settings.crl_max_iterations, gt=0)
    trajectory_level: bool = False


@dataclass
class LagrangeState:
    """État du multiplicateur et historique du chemin dual."""

    lam: float
    step_size: float
    xi: float
    history: List[Dict[str, float]] = field(default_factory=list)
    converged: bool = False

    def __post_init__(self):
        if self.lam < 0.0:
            raise ConfigurationError("λ doit être ≥ 0")

    def update(self, expected_cost: float) -> float:
        """Pas de montée projeté; retourne |Δλ|."""
        new_lam = max(0.0, self.lam + self.step_size * (expected_cost - self.xi))
        change = abs(new_lam - self.lam)
        self.lam = new_lam
        return change

    @property
    def iterations(self) -> int:
        return len(self.history)

    def to_dataframe(self) -> pd.DataFrame:
        columns = ["iteration", "lambda", "expected_cost", "return"]
        return pd.DataFrame(self.history, columns=columns)


def cost_table_of(cost: Union[LinearRewardModel, CostModel], features: FeatureMap) -> np.ndarray:
    """Table (S, A) d'un modèle de coût."""
    if isinstance(cost, LinearRewardModel) and cost.kind is not RewardKind.COST:
        raise ConfigurationError(f"modèle de type '{cost.kind.value}' utilisé comme coût")
    return cost.evaluate(features)


def expected_cost(
    cmdp: TabularCMDP,
    policy: BoltzmannPolicy,
    cost_table: np.ndarray,
    trajectory_level: bool = False,
) -> float:
    """
    Coût attendu sous π (occupation non actualisée): par pas par défaut,
    cumulé sur l'horizon si trajectory_level.
    """
    occ = occupancy(cmdp, policy, discounted=False)
    total = occ.expectation(cost_table)
    return total if trajectory_level else total / occ.horizon


def lagrangian_policy(
    cmdp: TabularCMDP,
    reward_table: np.ndarray,
    cost_table: np.ndarray,
    lam: float,
    xi: float,
    init_q: Optional[np.ndarray] = None,
):
    """Solution entropique pour un multiplicateur λ fixé."""
    return soft_value_iteration(cmdp, reward_table - lam * (cost_table - xi), init_q=init_q)


def solve_crl(
    cmdp: TabularCMDP,
    r_task: Union[LinearRewardModel, np.ndarray],
    c: Union[LinearRewardModel, CostModel],
    xi: float,
    features: FeatureMap,
    config: Optional[CrlConfig] = None,
) -> Tuple[BoltzmannPolicy, LagrangeState]:
    """
    Résout le CMDP par relaxation lagrangienne.

    Args:
        cmdp: CMDP tabulaire
        r_task: Récompense de tâche (modèle ou table)
        c: Modèle de coût (≥ 0)
        xi: Seuil ξ ≥ 0
        features: Carte de features du CMDP
        config: Paramètres de la montée duale

    Returns:
        (politique finale, état lagrangien)

    Raises:
        InfeasibleError: λ dépasse λ_max avec une violation persistante
    """
    config = config or CrlConfig()
    if xi < 0.0:
        raise ArgumentError(f"ξ doit être ≥ 0 (reçu {xi})")
    reward = as_reward_table(r_task, cmdp, features)
    cost = cost_table_of(c, features)
    state = LagrangeState(lam=config.lambda_init, step_size=config.step_size, xi=xi)

    q = None
    policy = None
    for iteration in range(config.max_iterations):
        solution = lagrangian_policy(cmdp, reward, cost, state.lam, xi, init_q=q)
        q, policy = solution.q.values, solution.policy
        occ = occupancy(cmdp, policy, discounted=False)
        total_cost = occ.expectation(cost)
        current_cost = total_cost if config.trajectory_level else total_cost / occ.horizon
        gap = current_cost - xi
        state.history.append({
            "iteration": iteration,
            "lambda": state.lam,
            "expected_cost": current_cost,
            "return": occ.expectation(reward),
        })
        logger.debug(f"CRL it {iteration}: λ={state.lam:.4f} E[c]={current_cost:.5f} ξ={xi:.5f}")

        if abs(gap) <= config.dual_tolerance or (state.lam == 0.0 and gap <= 0.0):
            state.converged = True
            break
        change = state.update(current_cost)
        if state.lam > config.lambda_max and gap > config.dual_tolerance:
            raise InfeasibleError(
                f"CRL infaisable: λ={state.lam:.1f} > λ_max={config.lambda_max} "
                f"avec E[c]−ξ={gap:.4f}"
            )
        if change <= config.lambda_change_tolerance:
            state.converged = True
            break
    else:
        logger.warning(
            f"CRL non convergé après {config.max_iterations} itérations (λ={state.lam:.4f}, "
            f"E[c]={state.history[-1]['expected_cost']:.5f}, ξ={xi:.5f})"
        )

    return policy, state


def compute_threshold(
    demos: DemoSet, r_c: Union[LinearRewardModel, CostModel], features: FeatureMap
) -> float:
    """
    ξ = max_{(s,a) ∈ D_E} −r_c(s, a).

    Un modèle de type cost est pris comme c = −r_c directement.

    Args:
        demos: Démonstrations
        r_c: Récompense résiduelle (ou modèle de coût)
        features: Carte de features de l'environnement des démonstrations

    Returns:
        Seuil ξ
    """
    if demos is None or len(demos) == 0:
        raise ArgumentError("ensemble de démonstrations vide")
    states, actions = demos.state_actions()
    if isinstance(r_c, LinearRewardModel) and r_c.kind is not RewardKind.COST:
        costs = -r_c.raw_values(features)
    else:
        costs = r_c.evaluate(features)
    return float(np.max(costs[states, actions]))


def crl_summary(state: LagrangeState) -> Dict[str, Any]:
    """Résumé d'un état lagrangien pour les rapports."""
    last = state.history[-1] if state.history else {}
    return {
        "lambda": state.lam,
        "xi": state.xi,
        "iterations": state.iterations,
        "converged": state.converged,
        "expected_cost": last.get("expected_cost"),
    }
