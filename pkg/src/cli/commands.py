"""
Commandes du pipeline: demos → learn → transfer → eval, et experiment.

Chaque commande lit et écrit des archives JSON; elle est idempotente pour
des arguments et des entrées identiques.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ValidationError

from src.cli.archive import (
    constraint_from_dict,
    constraint_to_dict,
    cost_from_dict,
    cost_to_dict,
    demos_payload,
    env_recipe,
    load_demos,
    read_archive,
    rebuild_env,
    write_archive,
)
from src.cli.config_schema import ExperimentConfig
from src.core.serialization import (
    demos_from_dict,
    demos_to_dict,
    model_to_dict,
    trajectory_from_dict,
    trajectory_to_dict,
)
from src.core.types import LinearRewardModel
from src.crl import compute_threshold, crl_summary, generate_expert_demos, violating_steps
from src.envs import build_env, build_training_env
from src.evaluation.experiment import (
    SUMMARY_COLUMNS,
    ReportBundle,
    learn_constraint,
    run_experiment,
    task_reward,
    transfer_policy,
)
from src.evaluation.metrics import decomposition_correlation, success_rate, violation_rate
from src.exceptions import ArgumentError, ConfigurationError, UndefinedCorrelationError
from src.observability.diagnostics import DiagnosticsRecorder
from src.solver import rollout
from src.utils.seeding import derive_seed


def override_section(section: BaseModel, **updates: Any) -> BaseModel:
    """Copie validée d'une section avec les options CLI non nulles."""
    values = section.model_dump()
    values.update({k: v for k, v in updates.items() if v is not None})
    try:
        return type(section).model_validate(values)
    except ValidationError as exc:
        raise ConfigurationError(f"option invalide:\n{exc}") from exc


def parse_task_reward(text: Optional[str]) -> Optional[Dict[str, float]]:
    """
    Analyse "feature=poids,feature=poids".

    Raises:
        ArgumentError: format invalide
    """
    if text is None:
        return None
    weights: Dict[str, float] = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise ArgumentError(f"poids de tâche invalide: '{item}' (attendu feature=poids)")
        try:
            weights[name.strip()] = float(value)
        except ValueError as exc:
            raise ArgumentError(f"poids non numérique pour '{name.strip()}': {value}") from exc
    if not weights:
        raise ArgumentError("récompense de tâche vide")
    return weights


def cmd_demos(
    config: ExperimentConfig,
    out: Path,
    n: Optional[int] = None,
    seed: Optional[int] = None,
) -> Path:
    """
    Génère des démonstrations expertes et les archive avec leur environnement.

    Args:
        config: Configuration (sections env et demos)
        out: Archive de sortie
        n: Nombre de démonstrations (défaut: demos.n)
        seed: Graine (défaut: env.seed)

    Returns:
        Chemin de l'archive
    """
    demos_cfg = override_section(config.demos, n=n)
    seed = config.env.seed if seed is None else seed
    params = config.env.builder_params()
    if demos_cfg.horizon is not None:
        params["horizon"] = demos_cfg.horizon

    env = build_training_env(config.env.family, seed, grid=config.env.grid, **params)
    demos = generate_expert_demos(
        env, demos_cfg.n, derive_seed(seed, "demos"), reward_scale=demos_cfg.reward_scale
    )
    table = env.cost_table()
    violations = sum(violating_steps(t, table) for t in demos)
    print(f"Démonstrations: {len(demos)} | pas violants: {violations}")
    return write_archive(out, "demos", demos_payload(env, demos))


def cmd_learn(
    demo_path: Path,
    config: ExperimentConfig,
    out: Path,
    method: Optional[str] = None,
    rd_mode: Optional[str] = None,
    alpha: Optional[float] = None,
) -> Path:
    """
    Apprend une contrainte (TCL, FC ou ICRL-like) depuis une archive de démonstrations.

    Les diagnostics sont écrits à côté de l'archive, même en cas d'échec du solveur.

    Returns:
        Chemin de l'archive de modèle
    """
    learn = override_section(config.learn, method=method, rd_mode=rd_mode, alpha=alpha)
    config = config.model_copy(update={"learn": learn})
    env, demos = load_demos(demo_path)

    out = Path(out)
    recorder = DiagnosticsRecorder(learn.method)
    try:
        constraint = learn_constraint(learn.method, demos, env, config, recorder)
    finally:
        if len(recorder):
            recorder.write_csv(out.with_suffix(".diagnostics.csv"))

    payload = {
        "env": env_recipe(env),
        "constraint": constraint_to_dict(constraint),
        "demos": demos_to_dict(demos),
        "learn": learn.model_dump(mode="json"),
    }
    if "decomposition" in payload["constraint"]:
        print(f"α = {payload['constraint']['decomposition']['alpha']}")
    print(f"Méthode: {learn.method} | ξ = {constraint.xi:.6g}")
    return write_archive(out, "model", payload)


def cmd_transfer(
    model_path: Path,
    config: ExperimentConfig,
    out: Path,
    task_weights: Optional[Dict[str, float]] = None,
    seed: Optional[int] = None,
) -> Path:
    """
    Transfère une contrainte apprise vers un nouvel environnement.

    ξ est recalculé sur les démonstrations de l'archive si elles y sont,
    sinon relu depuis le modèle; transfer.xi_override a priorité.

    Returns:
        Chemin de l'archive de trajectoires

    Raises:
        FeatureMismatchError: features du coût absentes du nouvel environnement
    """
    doc = read_archive(model_path, "model")
    constraint = constraint_from_dict(doc["constraint"])
    seed = config.env.seed if seed is None else seed

    xi = constraint.xi
    if "demos" in doc and "env" in doc:
        training = rebuild_env(doc["env"])
        demos = demos_from_dict(doc["demos"])
        xi = max(0.0, compute_threshold(demos, constraint.residual, training.features))
    if config.transfer.xi_override is not None:
        xi = config.transfer.xi_override

    spec = config.env.to_spec(seed=seed)
    spec = spec.model_copy(update={"params": {**spec.params, **config.env.transfer_params}})
    env = build_env(spec)
    if isinstance(constraint.cost, LinearRewardModel):
        env.features.resolve(constraint.cost.feature_names)

    weights = task_weights or config.transfer.task_reward
    reward = task_reward(env, weights, config.transfer.reward_scale)
    policy, state = transfer_policy(constraint, env, reward, config.transfer.crl_config(), xi)
    trajectories = rollout(env.cmdp, policy, derive_seed(seed, "transfer"), config.eval.rollouts)

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    state.to_dataframe().to_csv(out.with_suffix(".dual.csv"), index=False)
    summary = crl_summary(state)
    print(
        f"Transfert {constraint.method} → {env.name}: "
        f"λ = {summary['lambda']:.4g}, ξ = {xi:.6g}"
    )
    return write_archive(out, "rollouts", {
        "env": env_recipe(env),
        "method": constraint.method,
        "residual": cost_to_dict(constraint.residual),
        "xi": float(xi),
        "crl": summary,
        "task_reward": model_to_dict(reward),
        "trajectories": [trajectory_to_dict(t) for t in trajectories],
    })


def evaluate_rollout_archive(path: Path, samples: int, seed: int) -> Dict[str, Any]:
    """Ligne de métriques pour une archive de trajectoires."""
    doc = read_archive(path, "rollouts")
    env = rebuild_env(doc["env"])
    trajectories = [trajectory_from_dict(t) for t in doc.get("trajectories", [])]
    success, goal = success_rate(trajectories, env)
    row: Dict[str, Any] = {c: np.nan for c in SUMMARY_COLUMNS}
    row.update({
        "method": doc.get("method", "unknown"),
        "env_family": env.family,
        "mode": "transfer",
        "seed": env.seed,
        "success_rate": success,
        "goal_completion": goal,
        "violation_rate": violation_rate(trajectories, env.expert_cost, env.features),
    })
    if env.ground_truth is not None and "residual" in doc:
        residual = cost_from_dict(doc["residual"])
        columns = ("corr_rc_vs_rp_true", "corr_rc_vs_rc_true")
        for column, reference in zip(columns, env.ground_truth):
            try:
                row[column] = decomposition_correlation(residual, reference, [env], samples, seed)
            except UndefinedCorrelationError as exc:
                logger.warning(f"{column} indéfinie pour {path}: {exc}")
    return row


def cmd_eval(
    rollout_paths: Sequence[Path],
    out: Path,
    config: Optional[ExperimentConfig] = None,
) -> pd.DataFrame:
    """
    Calcule les métriques de plusieurs archives de trajectoires.

    Returns:
        DataFrame aux colonnes du résumé d'expérience
    """
    if not rollout_paths:
        raise ArgumentError("aucune archive de trajectoires fournie")
    config = config or ExperimentConfig()
    seed = derive_seed(config.env.seed, "correlation")
    rows: List[Dict[str, Any]] = [
        evaluate_rollout_archive(Path(p), config.eval.correlation_samples, seed)
        for p in rollout_paths
    ]
    frame = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
    frame = frame.sort_values(["method", "env_family", "seed"], kind="stable")
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format="%.10g")
    logger.success(f"✅ Métriques écrites dans {out} ({len(frame)} lignes)")
    return frame


def cmd_experiment(
    config: ExperimentConfig,
    output_dir: Optional[Path] = None,
    jobs: Optional[int] = None,
) -> ReportBundle:
    """Exécute run_experiment et affiche le tableau résumé."""
    bundle = run_experiment(config, output_dir=output_dir, jobs=jobs)
    with pd.option_context("display.max_columns", None, "display.width", 160):
        print(bundle.summary.to_string(index=False))
    return bundle
