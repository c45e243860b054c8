"""
Génération de démonstrations expertes contraintes.
"""

from typing import List, Optional

import numpy as np
from loguru import logger

from config import settings
from src.core.types import DemoSet, Trajectory
from src.crl.lagrangian import CrlConfig, solve_crl
from src.envs.common import EnvInstance
from src.exceptions import ArgumentError, InfeasibleError
from src.solver import rollout
from src.utils.seeding import derive_seed

MIN_SAMPLES_FOR_REJECTION_CHECK = 100


def expert_crl_config() -> CrlConfig:
    """Montée duale de l'expert: ξ = 0 avec une bande de tolérance."""
    return CrlConfig(
        step_size=settings.demo_dual_step_size,
        dual_tolerance=settings.demo_cost_tolerance,
    )


def violating_steps(traj: Trajectory, cost_table: np.ndarray) -> int:
    return int(np.count_nonzero(cost_table[traj.states, traj.actions] > 0.0))


def generate_expert_demos(
    env: EnvInstance,
    n: int,
    seed: int,
    config: Optional[CrlConfig] = None,
    reward_scale: Optional[float] = None,
) -> DemoSet:
    """
    Génère n démonstrations sans aucune violation.

    La politique experte résout le CMDP (expert_reward_scale · r_E, c_E, ξ = 0);
    les trajectoires contenant un pas violant sont rejetées et retirées.

    Args:
        env: Instance d'environnement
        n: Nombre de démonstrations
        seed: Graine (sous-flux "demos")
        config: Montée duale (défaut: expert_crl_config())
        reward_scale: Échelle de r_E (défaut: settings.expert_reward_scale)

    Returns:
        DemoSet de n trajectoires

    Raises:
        InfeasibleError: taux de rejet supérieur à settings.demo_max_rejection_rate
    """
    if n < 1:
        raise ArgumentError(f"n doit être ≥ 1 (reçu {n})")
    scale = reward_scale if reward_scale is not None else settings.expert_reward_scale
    logger.info(f"Génération de {n} démonstrations sur {env.name} (graine {seed})")

    policy, state = solve_crl(
        env.cmdp,
        env.expert_reward.scaled(scale),
        env.expert_cost,
        0.0,
        env.features,
        config or expert_crl_config(),
    )
    logger.debug(f"Politique experte: λ={state.lam:.3f} après {state.iterations} itérations")

    cost_table = env.cost_table()
    accepted: List[Trajectory] = []
    sampled = 0
    batch_size = max(n, 16)
    batch = 0
    while len(accepted) < n:
        trajectories = rollout(env.cmdp, policy, derive_seed(seed, "demos", batch), batch_size)
        batch += 1
        for traj in trajectories:
            sampled += 1
            if violating_steps(traj, cost_table) == 0:
                accepted.append(traj)
                if len(accepted) == n:
                    break

        rejection_rate = 1.0 - len(accepted) / sampled
        too_many = rejection_rate > settings.demo_max_rejection_rate
        if sampled >= MIN_SAMPLES_FOR_REJECTION_CHECK and too_many:
            raise InfeasibleError(
                f"{env.name}: taux de rejet des démonstrations {rejection_rate:.1%} "
                f"> {settings.demo_max_rejection_rate:.0%}"
            )

    rejected = sampled - len(accepted)
    if rejected:
        logger.warning(f"{rejected} trajectoires violantes rejetées sur {sampled}")
    logger.success(f"✅ {n} démonstrations sans violation générées pour {env.name}")
    return DemoSet(tuple(accepted), env.name)
