"""
Apprentissage de contrainte à récompense de tâche connue (ICRL-like):
r = r_p connue + r_c, seuls les poids de r_c sont appris par IRL.
"""

from typing import Optional, Sequence

import numpy as np
from loguru import logger

from src.core.types import (
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    cost_from_residual,
)
from src.learning.config import TclConfig
from src.learning.irl import evaluate_reward, expert_feature_expectations
from src.learning.tcl import irl_loop_step
from src.observability.diagnostics import DiagnosticsRecorder


def icrl_like(
    demos: DemoSet,
    known_r_p: LinearRewardModel,
    cmdp: TabularCMDP,
    features: FeatureMap,
    free_features: Optional[Sequence[str]] = None,
    config: Optional[TclConfig] = None,
    recorder: Optional[DiagnosticsRecorder] = None,
) -> LinearRewardModel:
    """
    Apprend r_c par IRL avec r_p fixée et retourne le coût c = −r_c.

    Args:
        demos: Démonstrations expertes
        known_r_p: Récompense de tâche imposée
        cmdp: CMDP des démonstrations
        features: Carte de features
        free_features: Features sur lesquelles r_c peut porter (défaut: toutes)
        config: Configuration (pas, itérations, tolérance IRL)
        recorder: Canal de diagnostics

    Returns:
        Modèle de coût (kind=cost, tronqué à 0)
    """
    config = config or TclConfig()
    recorder = recorder if recorder is not None else DiagnosticsRecorder("icrl")
    known = known_r_p.aligned_to(features)
    names = features.names
    free_names = names if free_features is None else tuple(free_features)
    free_mask = np.zeros(len(names), dtype=bool)
    free_mask[features.resolve(free_names)] = True

    if not free_mask.any():
        logger.info("ICRL-like: aucune dimension résiduelle libre, coût nul")
        return cost_from_residual(LinearRewardModel.zeros(names, RewardKind.RESIDUAL))

    reward = LinearRewardModel(known.weights, names, RewardKind.OVERALL)
    expert = expert_feature_expectations(demos, features, reward, cmdp.discount)
    state = evaluate_reward(cmdp, features, reward, expert, config.irl_step_size)

    for t in range(1, config.outer_iterations + 1):
        state = irl_loop_step(t, state, demos, cmdp, features, config, free_mask=free_mask)
        free_gap = float(np.max(np.abs(state.feature_gap[free_mask])))
        recorder.record(iteration=t, irl_objective=state.objective, max_feature_gap=free_gap)
        if free_gap <= config.irl_tolerance or not state.accepted:
            break

    residual = LinearRewardModel(state.reward.weights - known.weights, names, RewardKind.RESIDUAL)
    norm = np.linalg.norm(residual.weights)
    logger.success(f"✅ ICRL-like terminé en {t} itérations (||r_c||={norm:.3f})")
    return cost_from_residual(residual)
