"""
Orchestration des expériences: démonstrations → apprentissage → transfert → évaluation.

Chaque couple (famille, graine) est un travail indépendant; les lignes de
résultats sont indexées par run_id et triées avant écriture.
"""

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

import src
from config import settings
from src.baselines import fc_constraint, icrl_like
from src.cli.config_schema import AVAILABLE_METHODS, ExperimentConfig, load_config
from src.core.types import DemoSet, LinearRewardModel, RewardKind
from src.crl import CrlConfig, compute_threshold, generate_expert_demos, solve_crl
from src.envs import EnvInstance, build_training_env, sample_eval_suite
from src.envs.common import AT_GOAL, GOAL_DISTANCE
from src.evaluation.metrics import (
    ModelLike,
    count_violations,
    decomposition_correlation,
    per_environment_correlations,
    reached_goal,
)
from src.exceptions import ArgumentError, ConfigurationError, TclError, UndefinedCorrelationError
from src.learning import tcl_train
from src.observability.diagnostics import DiagnosticsRecorder
from src.solver import rollout
from src.utils.seeding import derive_seed

SUMMARY_COLUMNS = [
    "method",
    "env_family",
    "mode",
    "seed",
    "success_rate",
    "goal_completion",
    "violation_rate",
    "corr_rc_vs_rp_true",
    "corr_rc_vs_rc_true",
    "wall_clock_s",
]
RUN_COLUMNS = ["run_id", *SUMMARY_COLUMNS, "xi", "n_envs", "n_failed", "n_trajectories"]
ERROR_COLUMNS = ["run_id", "stage", "error_type", "exit_code", "message"]
ENV_COLUMNS = [
    "env", "success", "goal_completion", "violations", "steps", "lambda", "converged", "failed"
]

# Récompense de tâche de l'utilisateur par défaut (partie tâche de r_E)
DEFAULT_TASK_WEIGHTS = {AT_GOAL: 1.0, GOAL_DISTANCE: -0.1}


@dataclass
class LearnedConstraint:
    """Contrainte apprise par une méthode, prête pour le transfert."""

    method: str
    cost: ModelLike
    residual: ModelLike
    xi: float
    recorder: Optional[DiagnosticsRecorder] = None
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class ReportBundle:
    """Rapport d'expérience écrit sur disque."""

    output_dir: Path
    manifest: Dict[str, Any]
    runs: pd.DataFrame
    summary: pd.DataFrame
    errors: pd.DataFrame


def task_reward(
    env: EnvInstance, weights: Optional[Dict[str, float]] = None, scale: float = 1.0
) -> LinearRewardModel:
    """
    Récompense de tâche de l'utilisateur sur une instance.

    Args:
        env: Instance cible
        weights: Poids par feature (défaut: 1·at_goal − 0.1·goal_distance)
        scale: Échelle appliquée (même échelle que l'expert)

    Raises:
        ConfigurationError: poids sur une feature hors de la base de R_p
    """
    weights = dict(weights or DEFAULT_TASK_WEIGHTS)
    outside = sorted(set(weights) - set(env.task_space.basis))
    if outside:
        raise ConfigurationError(
            "la récompense de tâche doit appartenir à R_p; "
            f"features hors base: {', '.join(outside)}"
        )
    model = LinearRewardModel.from_dict(weights, env.features.names, RewardKind.TASK).scaled(scale)
    if not env.task_space.contains(model):
        raise ConfigurationError(
            "la récompense de tâche ne respecte pas les contraintes de signe de R_p"
        )
    return model


def icrl_known_task_reward(
    env: EnvInstance, scale: float, misspecification: float = 1.0
) -> LinearRewardModel:
    """Récompense de tâche imposée à l'ICRL (poids de distance × misspecification)."""
    weights = dict(DEFAULT_TASK_WEIGHTS)
    weights[GOAL_DISTANCE] *= misspecification
    return LinearRewardModel.from_dict(weights, env.features.names, RewardKind.TASK).scaled(scale)


def learn_constraint(
    method: str,
    demos: DemoSet,
    env: EnvInstance,
    config: ExperimentConfig,
    recorder: Optional[DiagnosticsRecorder] = None,
) -> LearnedConstraint:
    """
    Apprend une contrainte transférable avec la méthode demandée.

    Args:
        method: "tcl", "fc" ou "icrl"
        demos: Démonstrations expertes
        env: Instance d'entraînement
        config: Configuration d'expérience
        recorder: Canal de diagnostics (créé si absent)

    Returns:
        LearnedConstraint (ξ ≥ 0)
    """
    if method not in AVAILABLE_METHODS:
        raise ConfigurationError(
            f"méthode inconnue: {method}. Disponibles: {list(AVAILABLE_METHODS)}"
        )
    recorder = recorder if recorder is not None else DiagnosticsRecorder(method)
    details: Dict[str, Any] = {}

    if method == "tcl":
        result = tcl_train(
            demos, env.cmdp, env.features, env.task_space, config.learn.tcl_config(), recorder
        )
        cost, residual = result.cost_model(), result.r_c
        details = {"result": result}
    elif method == "fc":
        cost = fc_constraint(demos, env.features)
        residual = cost
    else:
        known = icrl_known_task_reward(
            env, config.demos.reward_scale, config.learn.icrl_misspecification
        )
        cost = icrl_like(
            demos, known, env.cmdp, env.features,
            free_features=config.learn.icrl_free_features,
            config=config.learn.tcl_config(),
            recorder=recorder,
        )
        residual = cost
        details = {"known_r_p": known}

    xi = max(0.0, compute_threshold(demos, residual, env.features))
    logger.info(f"Contrainte {method} apprise sur {env.name}: ξ={xi:.5f}")
    return LearnedConstraint(method, cost, residual, xi, recorder, details)


def transfer_policy(
    constraint: LearnedConstraint,
    env: EnvInstance,
    reward: LinearRewardModel,
    config: Optional[CrlConfig] = None,
    xi: Optional[float] = None,
):
    """Politique contrainte sur une nouvelle instance: CRL avec (r_p^new, c, ξ)."""
    threshold = constraint.xi if xi is None else xi
    return solve_crl(env.cmdp, reward, constraint.cost, threshold, env.features, config)


class TransferEvaluator:
    """
    Évalue une contrainte apprise sur une suite d'instances de test.

    Pour chaque instance: résolution CRL, tirage de trajectoires puis
    comptage des succès, buts atteints et pas violants.
    """

    def __init__(
        self,
        constraint: LearnedConstraint,
        config: ExperimentConfig,
    ):
        """
        Initialise l'évaluateur.

        Args:
            constraint: Contrainte apprise
            config: Configuration (sections transfer et eval)
        """
        self.constraint = constraint
        self.config = config
        self.crl_config = config.transfer.crl_config()
        override = config.transfer.xi_override
        self.xi = override if override is not None else constraint.xi
        self.failures: List[Tuple[str, TclError]] = []

    def evaluate_env(self, env: EnvInstance, seed: int) -> Dict[str, Any]:
        """Ligne de résultats pour une instance."""
        try:
            transfer = self.config.transfer
            reward = task_reward(env, transfer.task_reward, transfer.reward_scale)
            policy, state = transfer_policy(self.constraint, env, reward, self.crl_config, self.xi)
        except TclError as exc:
            logger.warning(f"Transfert échoué sur {env.name}: {exc}")
            self.failures.append((env.name, exc))
            return {
                "env": env.name, "success": 0, "goal_completion": 0, "violations": 0, "steps": 0,
                "lambda": np.nan, "converged": False, "failed": True,
            }

        trajectories = rollout(env.cmdp, policy, seed, self.config.eval.rollouts)
        table = env.cost_table()
        reached = [reached_goal(t, env) for t in trajectories]
        clean = [not np.any(table[t.states, t.actions] > 0.0) for t in trajectories]
        violations, steps = count_violations(trajectories, env.expert_cost, env.features)
        return {
            "env": env.name,
            "success": int(sum(r and c for r, c in zip(reached, clean))),
            "goal_completion": int(sum(reached)),
            "violations": violations,
            "steps": steps,
            "lambda": state.lam,
            "converged": state.converged,
            "failed": False,
        }

    def evaluate_suite(
        self, suite: Sequence[EnvInstance], seed: int, show_progress: bool = False
    ) -> pd.DataFrame:
        """
        Évalue toutes les instances d'une suite.

        Args:
            suite: Instances de test
            seed: Graine des tirages
            show_progress: Afficher une barre tqdm

        Returns:
            DataFrame (une ligne par instance)
        """
        rows = []
        method = self.constraint.method
        iterator = tqdm(suite, desc=f"Transfert {method}", disable=not show_progress)
        for i, env in enumerate(iterator):
            rows.append(self.evaluate_env(env, derive_seed(seed, "eval", method, i)))
        return pd.DataFrame(rows, columns=ENV_COLUMNS)

    def aggregate(self, results: pd.DataFrame) -> Dict[str, float]:
        """Taux cumulés sur la suite (les instances en échec comptent comme des échecs)."""
        n_traj = self.config.eval.rollouts * len(results)
        steps = int(results["steps"].sum())
        return {
            "success_rate": float(results["success"].sum()) / n_traj,
            "goal_completion": float(results["goal_completion"].sum()) / n_traj,
            "violation_rate": float(results["violations"].sum()) / steps if steps else np.nan,
            "n_envs": len(results),
            "n_failed": int(results["failed"].sum()),
            "n_trajectories": n_traj,
        }

    def _log_summary(self, label: str, metrics: Dict[str, float]):
        logger.info("=" * 60)
        logger.info(f"📊 RÉSULTATS {label}")
        logger.info("=" * 60)
        for name in ("success_rate", "goal_completion", "violation_rate"):
            logger.info(f"  {name:<20}: {metrics[name]:.4f}")
        if metrics["n_failed"]:
            logger.warning(f"  {metrics['n_failed']} instances sans politique faisable")
        logger.info("=" * 60)


def correlations(
    constraint: LearnedConstraint, suite: Sequence[EnvInstance], samples: int, seed: int
) -> Tuple[Dict[str, float], Optional[pd.DataFrame]]:
    """
    Corrélations (r_c appris vs r_p*, r_c*) sur une suite à vérité terrain connue.

    Returns:
        (corrélations regroupées, corrélations par instance ou None)
    """
    if not suite or any(env.ground_truth is None for env in suite):
        return {"corr_rc_vs_rp_true": np.nan, "corr_rc_vs_rc_true": np.nan}, None
    values = {}
    r_p_true, r_c_true = suite[0].ground_truth
    corr_seed = derive_seed(seed, "correlation")
    for column, reference in (("corr_rc_vs_rp_true", r_p_true), ("corr_rc_vs_rc_true", r_c_true)):
        try:
            values[column] = decomposition_correlation(
                constraint.residual, reference, suite, samples, corr_seed
            )
        except UndefinedCorrelationError as exc:
            logger.warning(f"{column} indéfinie pour {constraint.method}: {exc}")
            values[column] = np.nan

    def per_env_values(reference):
        return per_environment_correlations(
            constraint.residual, reference, suite, samples, corr_seed
        )

    per_env = pd.DataFrame({
        "env": [env.name for env in suite],
        "corr_rc_vs_rp_true": per_env_values(r_p_true),
        "corr_rc_vs_rc_true": per_env_values(r_c_true),
    })
    return values, per_env


def run_id(family: str, seed: int, method: str, mode: str) -> str:
    return f"{family}-s{seed:04d}-{method}-{mode}"


def run_seeds(family: str, seed: int) -> Dict[str, int]:
    """Graines dérivées d'un travail (famille, graine)."""
    return {
        "env_seed": derive_seed(seed, "training-env", family),
        "demo_seed": derive_seed(seed, "demos", family),
        "eval_seed": derive_seed(seed, "eval", family),
    }


def _empty_row(family: str, seed: int, method: str, mode: str) -> Dict[str, Any]:
    row = {c: np.nan for c in RUN_COLUMNS}
    row.update({
        "run_id": run_id(family, seed, method, mode),
        "method": method,
        "env_family": family,
        "mode": mode,
        "seed": seed,
    })
    return row


def _error_row(rid: str, stage: str, exc: BaseException) -> Dict[str, Any]:
    """Ligne de errors.csv; les exceptions hors TclError prennent le code générique."""
    return {
        "run_id": rid,
        "stage": stage,
        "error_type": type(exc).__name__,
        "exit_code": getattr(exc, "exit_code", TclError.exit_code),
        "message": str(exc),
    }


def _log_stage_failure(label: str, exc: Exception):
    if isinstance(exc, TclError):
        logger.error(f"{label}: {exc}")
    else:
        logger.opt(exception=exc).error(f"{label} (erreur inattendue): {exc!r}")


def failed_job(config: ExperimentConfig, family: str, seed: int, exc: Exception) -> Dict[str, Any]:
    """Résultat d'un travail interrompu: lignes vides et une erreur "job" par run."""
    rows = [
        _empty_row(family, seed, method, mode)
        for method in config.learn.methods
        for mode in config.eval.modes
    ]
    errors = [_error_row(row["run_id"], "job", exc) for row in rows]
    return {"rows": rows, "errors": errors, "diagnostics": {}}


def run_family_seed(config: ExperimentConfig, family: str, seed: int) -> Dict[str, Any]:
    """
    Exécute toutes les méthodes et tous les modes pour un couple (famille, graine).

    Un échec à une étape (demos, suite, learn, transfer) devient une ligne
    d'erreur pour les runs concernés; les autres runs continuent.

    Returns:
        {"rows": [...], "errors": [...], "diagnostics": {run_key: DataFrame}}
    """
    seeds = run_seeds(family, seed)
    methods, modes = config.learn.methods, config.eval.modes
    rows = {(m, mode): _empty_row(family, seed, m, mode) for m in methods for mode in modes}
    errors: List[Dict[str, Any]] = []
    diagnostics: Dict[str, pd.DataFrame] = {}

    def fail_all(stage: str, exc: Exception, selected=None):
        for (m, mode), row in rows.items():
            if selected is None or m == selected:
                errors.append(_error_row(row["run_id"], stage, exc))

    params = config.env.builder_params()
    if config.demos.horizon is not None:
        params["horizon"] = config.demos.horizon
    try:
        env = build_training_env(family, seeds["env_seed"], grid=config.env.grid, **params)
        demos = generate_expert_demos(
            env, config.demos.n, seeds["demo_seed"], reward_scale=config.demos.reward_scale
        )
    except Exception as exc:
        _log_stage_failure(f"{family}/s{seed}: démonstrations impossibles", exc)
        fail_all("demos", exc)
        return {"rows": list(rows.values()), "errors": errors, "diagnostics": diagnostics}

    suites: Dict[str, List[EnvInstance]] = {}
    for mode in modes:
        try:
            suites[mode] = sample_eval_suite(
                family,
                config.eval.count,
                seeds["env_seed"],
                mode,
                grid=config.env.grid,
                overrides=config.env.suite_overrides(),
                training_params=params,
            )
        except Exception as exc:
            _log_stage_failure(f"{family}/s{seed}: suite {mode} impossible", exc)
            for m in methods:
                errors.append(_error_row(rows[(m, mode)]["run_id"], "suite", exc))

    for method in methods:
        start = time.perf_counter()
        try:
            constraint = learn_constraint(method, demos, env, config)
        except Exception as exc:
            _log_stage_failure(f"{family}/s{seed}: apprentissage {method} échoué", exc)
            fail_all("learn", exc, selected=method)
            continue
        learn_time = time.perf_counter() - start
        if constraint.recorder is not None and len(constraint.recorder):
            diagnostics[f"{family}-s{seed:04d}-{method}"] = constraint.recorder.to_dataframe()

        for mode, suite in suites.items():
            row = rows[(method, mode)]
            mode_start = time.perf_counter()
            try:
                evaluator = TransferEvaluator(constraint, config)
                results = evaluator.evaluate_suite(suite, derive_seed(seeds["eval_seed"], mode))
                metrics = evaluator.aggregate(results)
                corr, per_env = correlations(
                    constraint, suite, config.eval.correlation_samples, seeds["eval_seed"]
                )
            except Exception as exc:
                _log_stage_failure(f"{family}/s{seed}: transfert {method}/{mode} échoué", exc)
                errors.append(_error_row(row["run_id"], "transfer", exc))
                continue
            evaluator._log_summary(f"{method} {family}/{mode} s{seed}", metrics)
            row.update(metrics)
            row.update(corr)
            if per_env is not None:
                diagnostics[f"{row['run_id']}-correlations"] = per_env
            row["xi"] = evaluator.xi
            for env_name, exc in evaluator.failures:
                errors.append(_error_row(row["run_id"], f"transfer:{env_name}", exc))
            if config.experiment.record_wall_clock:
                row["wall_clock_s"] = learn_time + time.perf_counter() - mode_start

    return {"rows": list(rows.values()), "errors": errors, "diagnostics": diagnostics}


def _write_csv(frame: pd.DataFrame, path: Path):
    frame.to_csv(path, index=False, float_format="%.10g")


def write_bundle(
    output_dir: Path,
    manifest: Dict[str, Any],
    rows: List[Dict[str, Any]],
    errors: List[Dict[str, Any]],
    diagnostics: Dict[str, pd.DataFrame],
) -> ReportBundle:
    """Écrit manifest.json, runs.csv, summary.csv, errors.csv et diagnostics/."""
    output_dir = Path(output_dir)
    (output_dir / "diagnostics").mkdir(parents=True, exist_ok=True)

    runs = pd.DataFrame(rows, columns=RUN_COLUMNS).sort_values("run_id").reset_index(drop=True)
    summary = runs[SUMMARY_COLUMNS]
    errors_df = (
        pd.DataFrame(errors, columns=ERROR_COLUMNS)
        .sort_values(["run_id", "stage"])
        .reset_index(drop=True)
    )

    with open(output_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, ensure_ascii=False)
    _write_csv(runs, output_dir / "runs.csv")
    _write_csv(summary, output_dir / "summary.csv")
    _write_csv(errors_df, output_dir / "errors.csv")
    for key in sorted(diagnostics):
        _write_csv(diagnostics[key], output_dir / "diagnostics" / f"{key}.csv")

    logger.success(
        f"✅ Rapport écrit dans {output_dir} ({len(runs)} runs, {len(errors_df)} erreurs)"
    )
    return ReportBundle(output_dir, manifest, runs, summary, errors_df)


def build_manifest(config: ExperimentConfig) -> Dict[str, Any]:
    runs = []
    for family in config.experiment.families:
        for seed in config.experiment.seeds:
            for method in config.learn.methods:
                for mode in config.eval.modes:
                    runs.append({"run_id": run_id(family, seed, method, mode), "seed": seed,
                                 **run_seeds(family, seed)})
    return {
        "name": config.experiment.name,
        "config_hash": config.config_hash(),
        "code_version": src.__version__,
        "config": config.model_dump(mode="json"),
        "runs": sorted(runs, key=lambda r: r["run_id"]),
    }


def run_experiment(
    config: Union[ExperimentConfig, Path, str],
    output_dir: Optional[Path] = None,
    jobs: Optional[int] = None,
) -> ReportBundle:
    """
    Exécute une expérience complète et écrit le rapport.

    Un travail qui échoue hors des étapes gardées (ou un processus qui meurt)
    produit des lignes d'erreur "job"; le rapport est toujours écrit.

    Args:
        config: Configuration validée ou chemin d'un document TOML
        output_dir: Répertoire de sortie (défaut: experiment.output_dir,
            sinon settings.runs_dir / experiment.name)
        jobs: Nombre de processus (défaut: experiment.jobs, sinon settings.jobs)

    Returns:
        ReportBundle

    Raises:
        ArgumentError: jobs < 1
    """
    if not isinstance(config, ExperimentConfig):
        config = load_config(Path(config))
    output_dir = Path(
        output_dir or config.experiment.output_dir or settings.runs_dir / config.experiment.name
    )
    if jobs is None:
        jobs = config.experiment.jobs if config.experiment.jobs is not None else settings.jobs
    if jobs < 1:
        raise ArgumentError(f"jobs doit être ≥ 1 (reçu {jobs})")
    section = config.experiment
    work = [(family, seed) for family in section.families for seed in section.seeds]

    logger.info(f"🚀 Expérience '{section.name}': {len(work)} travaux, {jobs} processus")
    rows: List[Dict[str, Any]] = []
    errors: List[Dict[str, Any]] = []
    diagnostics: Dict[str, pd.DataFrame] = {}

    def collect(result: Dict[str, Any]):
        rows.extend(result["rows"])
        errors.extend(result["errors"])
        diagnostics.update(result["diagnostics"])

    def collect_failure(family: str, seed: int, exc: Exception):
        _log_stage_failure(f"{family}/s{seed}: travail interrompu", exc)
        collect(failed_job(config, family, seed, exc))

    if jobs == 1:
        for family, seed in tqdm(work, desc="Travaux"):
            try:
                result = run_family_seed(config, family, seed)
            except Exception as exc:
                collect_failure(family, seed, exc)
                continue
            collect(result)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(run_family_seed, config, family, seed): (family, seed)
                for family, seed in work
            }
            for future, (family, seed) in tqdm(futures.items(), desc="Travaux"):
                try:
                    result = future.result()
                except Exception as exc:
                    collect_failure(family, seed, exc)
                    continue
                collect(result)

    return write_bundle(output_dir, build_manifest(config), rows, errors, diagnostics)
