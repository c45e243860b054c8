"""
Boucle TCL: alternance de pas IRL sur la récompense globale et de passes de
décomposition, puis une décomposition finale complète.
"""

from typing import Optional

import numpy as np
from loguru import logger

from src.core.types import (
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    TaskRewardSpace,
)
from src.learning.config import TclConfig
from src.learning.decomposition import (
    DecompositionResult,
    center_reward,
    decompose_approx,
    decompose_exact,
    visitation_weights,
)
from src.learning.irl import IrlState, evaluate_reward, expert_feature_expectations, irl_step
from src.observability.diagnostics import DiagnosticsRecorder
from src.solver import soft_value_iteration


def decompose(
    state: IrlState,
    space: TaskRewardSpace,
    cmdp: TabularCMDP,
    features: FeatureMap,
    config: TclConfig,
    init_weights: Optional[np.ndarray] = None,
) -> DecompositionResult:
    """
    Passe de décomposition selon config.rd_mode.

    r est d'abord centrée sur le support des visites de π_r; la politique de
    référence est celle de la récompense centrée.
    """
    centered = center_reward(state.reward, features, cmdp, state.policy)
    solution = soft_value_iteration(cmdp, centered.reward, centered.features)
    weights = visitation_weights(cmdp, solution.policy)
    if config.rd_mode == "exact":
        result = decompose_exact(
            centered.reward, solution.policy, space, cmdp, centered.features, config,
            state_weights=weights, init_weights=init_weights,
        )
    else:
        result = decompose_approx(
            centered.reward, solution.policy, space, cmdp, centered.features, config=config,
            q=solution.q.values, state_weights=weights,
        )
    result.diagnostics.update(
        reward_offset=centered.offset, constant_direction=centered.constant_direction
    )
    return result


def irl_loop_step(
    t: int,
    state: IrlState,
    demos: DemoSet,
    cmdp: TabularCMDP,
    features: FeatureMap,
    config: TclConfig,
    free_mask: Optional[np.ndarray] = None,
) -> IrlState:
    """Pas IRL t (≥ 1) selon le calendrier de pas configuré."""
    if config.step_schedule == "inverse_sqrt":
        return irl_step(
            state.reward, demos, cmdp, features,
            step_size=config.irl_step_size / np.sqrt(t), previous=state,
            line_search=False, free_mask=free_mask, config=config,
        )
    return irl_step(
        state.reward, demos, cmdp, features,
        previous=state, line_search=True, free_mask=free_mask, config=config,
    )


def tcl_train(
    demos: DemoSet,
    cmdp: TabularCMDP,
    features: FeatureMap,
    space: TaskRewardSpace,
    config: Optional[TclConfig] = None,
    recorder: Optional[DiagnosticsRecorder] = None,
) -> DecompositionResult:
    """
    Apprend la récompense globale par IRL et la décompose en (r_p, r_c).

    Args:
        demos: Démonstrations expertes
        cmdp: CMDP des démonstrations
        features: Carte de features
        space: Espace des récompenses de tâche
        config: Configuration TCL
        recorder: Canal de diagnostics par itération

    Returns:
        DecompositionResult final (décomposition complète de la récompense apprise)
    """
    config = config or TclConfig()
    recorder = recorder if recorder is not None else DiagnosticsRecorder("tcl")
    features.check_compatible(cmdp)
    logger.info(
        f"TCL: {len(demos)} démonstrations, RD {config.rd_mode}, "
        f"{config.outer_iterations} itérations max"
    )

    reward = LinearRewardModel.zeros(space.feature_names, RewardKind.OVERALL)
    expert = expert_feature_expectations(demos, features, reward, cmdp.discount)
    state = evaluate_reward(cmdp, features, reward, expert, config.irl_step_size)

    last_rd: Optional[DecompositionResult] = None
    for t in range(1, config.outer_iterations + 1):
        state = irl_loop_step(t, state, demos, cmdp, features, config)
        row = {
            "iteration": t,
            "irl_objective": state.objective,
            "max_feature_gap": state.max_gap,
            "step_size": state.step_size,
            "kl_value": np.nan,
            "bellman_penalty": np.nan,
            "rd_objective": np.nan,
        }

        if t % config.decomposition_interval == 0:
            init = last_rd.r_p.weights if last_rd is not None else None
            rd = decompose(state, space, cmdp, features, config, init_weights=init)
            rd_change = abs(rd.objective - last_rd.objective) if last_rd is not None else np.inf
            last_rd = rd
            row.update(
                kl_value=rd.kl_value, bellman_penalty=rd.bellman_penalty, rd_objective=rd.objective
            )
            recorder.record(**row)
            if state.max_gap <= config.irl_tolerance and rd_change <= config.rd_tolerance:
                logger.info(f"TCL convergé à l'itération {t} (écart max {state.max_gap:.2e})")
                break
        else:
            recorder.record(**row)

        if not state.accepted:
            logger.info(
                f"TCL: IRL stationnaire à l'itération {t} (écart max {state.max_gap:.2e})"
            )
            break

    final = decompose(state, space, cmdp, features, config)
    final.diagnostics.update(
        irl_iterations=t,
        max_feature_gap=state.max_gap,
        irl_objective=state.objective,
    )
    logger.success(
        f"✅ TCL terminé: KL={final.kl_value:.3e}, écart IRL max={state.max_gap:.3e}, "
        f"||r_c||={np.linalg.norm(final.r_c.weights):.3f}"
    )
    return final
