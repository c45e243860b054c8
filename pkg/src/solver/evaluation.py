"""
Évaluation d'une récompense sous une politique fixée.

Q_p(s, a) = r_p(s, a) + γ E_{s'}[V_p(s')], V_p(s) = E_{a∼π}[Q_p(s, a)]
(variante entropique: V_p(s) = E_{a∼π}[Q_p(s, a) − log π(a|s)]).
"""

from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from src.core.types import FeatureMap, TabularCMDP
from src.exceptions import SolverError
from src.solver.soft_value_iteration import (
    BoltzmannPolicy,
    RewardLike,
    SoftQTable,
    as_reward_table,
    continuation_mask,
)


def policy_matrix(cmdp: TabularCMDP, policy: BoltzmannPolicy) -> sp.csr_matrix:
    """Matrice Π (S, S·A) avec Π[s, s·A + a] = π(a|s)."""
    n_states, n_actions = cmdp.n_states, cmdp.n_actions
    rows = np.repeat(np.arange(n_states), n_actions)
    cols = np.arange(n_states * n_actions)
    shape = (n_states, n_states * n_actions)
    return sp.csr_matrix((policy.probs.ravel(), (rows, cols)), shape=shape)


def state_transition_matrix(cmdp: TabularCMDP, policy: BoltzmannPolicy) -> sp.csr_matrix:
    """P_π (S, S) avec continuation nulle depuis les états terminaux."""
    mask = continuation_mask(cmdp).ravel()
    masked = sp.diags(mask) @ cmdp.transition
    return (policy_matrix(cmdp, policy) @ masked).tocsc()


def solve_policy_values(cmdp: TabularCMDP, policy: BoltzmannPolicy, rhs: np.ndarray) -> np.ndarray:
    """
    Résout (I − γ P_π) X = rhs (rhs de forme (S,) ou (S, k)).

    Raises:
        SolverError: système singulier ou solution non finie
    """
    transition = state_transition_matrix(cmdp, policy)
    system = sp.identity(cmdp.n_states, format="csc") - cmdp.discount * transition
    try:
        solution = spsolve(system, rhs)
    except RuntimeError as exc:
        raise SolverError(f"évaluation de politique: système singulier ({exc})") from exc
    solution = np.asarray(solution, dtype=np.float64)
    if rhs.ndim == 2 and solution.ndim == 1:
        solution = solution.reshape(-1, rhs.shape[1])
    if not np.all(np.isfinite(solution)):
        raise SolverError("évaluation de politique non convergée (solution non finie)")
    return solution


def evaluate_under_policy(
    cmdp: TabularCMDP,
    r_p: RewardLike,
    policy: BoltzmannPolicy,
    features: Optional[FeatureMap] = None,
    entropy_bonus: bool = False,
) -> Tuple[SoftQTable, np.ndarray]:
    """
    Point fixe (Q_p, V_p) de r_p sous la politique π (et non π_p).

    Args:
        cmdp: CMDP tabulaire
        r_p: Récompense évaluée (modèle avec `features`, ou table)
        policy: Politique fixée π
        features: Carte de features si `r_p` est un modèle
        entropy_bonus: Inclure le terme −log π dans V_p

    Returns:
        (Q_p, V_p)
    """
    table = as_reward_table(r_p, cmdp, features)
    per_action = table - policy.log_probs if entropy_bonus else table
    rhs = np.sum(policy.probs * per_action, axis=1)
    v_p = solve_policy_values(cmdp, policy, rhs)
    q_p = table + cmdp.discount * continuation_mask(cmdp) * cmdp.expected_next(v_p)
    return SoftQTable(q_p, cmdp.discount, True, 0.0), v_p
