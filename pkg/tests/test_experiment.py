from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pandas as pd
import pytest

from config import settings
from src.cli.config_schema import load_config, parse_config
from src.crl import generate_expert_demos
from src.envs.common import AT_GOAL, GOAL_DISTANCE
from src.evaluation import experiment
from src.evaluation.experiment import (
    SUMMARY_COLUMNS,
    TransferEvaluator,
    learn_constraint,
    run_experiment,
    run_id,
    task_reward,
)
from src.exceptions import ConfigurationError, InfeasibleError

SMOKE = Path(__file__).resolve().parents[1] / "data" / "configs" / "smoke.toml"
BUNDLE_FILES = ("manifest.json", "runs.csv", "summary.csv", "errors.csv")


def _quick_config(jobs=1, methods=("fc",), **learn):
    return parse_config({
        "experiment": {"name": "quick", "seeds": [0], "families": ["reaching"], "jobs": jobs},
        "env": {"grid": 7, "horizon": 15},
        "demos": {"n": 4},
        "learn": {
            "methods": list(methods),
            "outer_iterations": 5,
            "decomposition_interval": 5,
            **learn,
        },
        "transfer": {"max_iterations": 100},
        "eval": {"modes": ["random"], "count": 2, "rollouts": 2, "correlation_samples": 20},
    })


def test_run_id_format():
    assert run_id("tray", 7, "tcl", "demo_like") == "tray-s0007-tcl-demo_like"


def test_task_reward_must_live_in_task_space(reaching_env):
    model = task_reward(reaching_env, {AT_GOAL: 1.0, GOAL_DISTANCE: -0.1}, scale=2.0)
    assert model.weight(AT_GOAL) == 2.0
    with pytest.raises(ConfigurationError):
        task_reward(reaching_env, {"hazard": -1.0})
    with pytest.raises(ConfigurationError):
        task_reward(reaching_env, {AT_GOAL: -1.0})


def test_unknown_method_is_a_configuration_error(reaching_env):
    demos = generate_expert_demos(reaching_env, 2, seed=0)
    with pytest.raises(ConfigurationError):
        learn_constraint("oracle", demos, reaching_env, _quick_config())


def test_fc_constraint_has_nonnegative_threshold(reaching_env):
    demos = generate_expert_demos(reaching_env, 4, seed=0)
    constraint = learn_constraint("fc", demos, reaching_env, _quick_config())
    assert constraint.method == "fc"
    assert constraint.xi >= 0.0


def test_evaluator_aggregates_pooled_rates(reaching_env):
    config = _quick_config()
    demos = generate_expert_demos(reaching_env, 4, seed=0)
    evaluator = TransferEvaluator(learn_constraint("fc", demos, reaching_env, config), config)
    results = evaluator.evaluate_suite([reaching_env, reaching_env], seed=3)
    metrics = evaluator.aggregate(results)
    assert len(results) == 2
    assert metrics["n_trajectories"] == 4
    assert 0.0 <= metrics["success_rate"] <= metrics["goal_completion"] <= 1.0


def test_experiment_writes_full_bundle(tmp_path):
    bundle = run_experiment(_quick_config(), output_dir=tmp_path / "out")
    out = tmp_path / "out"
    for name in BUNDLE_FILES:
        assert (out / name).exists()
    assert (out / "diagnostics").is_dir()
    assert list(bundle.summary.columns) == SUMMARY_COLUMNS
    assert bundle.runs["run_id"].tolist() == ["reaching-s0000-fc-random"]
    assert bundle.manifest["config_hash"] == _quick_config().config_hash()


def test_experiment_summary_is_reproducible(tmp_path):
    run_experiment(_quick_config(), output_dir=tmp_path / "a")
    run_experiment(_quick_config(), output_dir=tmp_path / "b")
    first = (tmp_path / "a" / "summary.csv").read_text(encoding="utf-8")
    assert first == (tmp_path / "b" / "summary.csv").read_text(encoding="utf-8")


@pytest.mark.slow
def test_smoke_configuration_runs_every_method(tmp_path):
    run_experiment(load_config(SMOKE), output_dir=tmp_path)
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert sorted(summary["method"]) == ["fc", "icrl", "tcl"]


def _read_bundle(out):
    for name in BUNDLE_FILES:
        assert (out / name).exists()
    return pd.read_csv(out / "runs.csv"), pd.read_csv(out / "errors.csv")


def test_learn_failure_is_recorded_and_bundle_still_written(tmp_path, monkeypatch):
    real = experiment.learn_constraint

    def broken(method, *args, **kwargs):
        if method == "icrl":
            raise RuntimeError("rupture simulée")
        return real(method, *args, **kwargs)

    monkeypatch.setattr(experiment, "learn_constraint", broken)
    run_experiment(_quick_config(methods=("fc", "icrl")), output_dir=tmp_path)
    runs, errors = _read_bundle(tmp_path)

    assert sorted(runs["run_id"]) == ["reaching-s0000-fc-random", "reaching-s0000-icrl-random"]
    [row] = errors[errors["stage"] == "learn"].to_dict("records")
    assert row["run_id"] == "reaching-s0000-icrl-random"
    assert (row["error_type"], row["exit_code"]) == ("RuntimeError", 1)
    by_method = runs.set_index("method")
    assert 0.0 <= by_method.loc["fc", "success_rate"] <= 1.0
    assert pd.isna(by_method.loc["icrl", "success_rate"])


def test_training_env_failure_fails_every_run_of_the_job(tmp_path, monkeypatch):
    def infeasible(*args, **kwargs):
        raise InfeasibleError("aucune instance faisable")

    monkeypatch.setattr(experiment, "build_training_env", infeasible)
    run_experiment(_quick_config(methods=("fc", "tcl")), output_dir=tmp_path)
    runs, errors = _read_bundle(tmp_path)

    assert len(runs) == 2 and runs["success_rate"].isna().all()
    assert set(errors["stage"]) == {"demos"}
    assert set(errors["exit_code"]) == {3}
    assert sorted(errors["run_id"]) == sorted(runs["run_id"])


def test_crashed_job_still_produces_a_partial_bundle(tmp_path, monkeypatch):
    def crash(config, family, seed):
        raise TypeError("argument inattendu")

    monkeypatch.setattr(experiment, "run_family_seed", crash)
    bundle = run_experiment(_quick_config(), output_dir=tmp_path)
    runs, errors = _read_bundle(tmp_path)

    assert runs["run_id"].tolist() == ["reaching-s0000-fc-random"]
    assert errors[["stage", "error_type"]].values.tolist() == [["job", "TypeError"]]
    assert len(bundle.summary) == 1


def test_unknown_env_param_is_rejected_at_parse_time():
    with pytest.raises(ConfigurationError, match="bogus"):
        parse_config({"env": {"params": {"bogus": 1}}})
    mixed = {"families": ["tray", "wall"]}
    with pytest.raises(ConfigurationError, match="tilt_sensitivity"):
        parse_config({"experiment": mixed, "env": {"transfer_params": {"tilt_sensitivity": 2}}})
    tray_only = {"families": ["tray"]}
    config = parse_config({"experiment": tray_only, "env": {"params": {"tilt_sensitivity": 1}}})
    assert config.env.params == {"tilt_sensitivity": 1}
    with pytest.raises(ConfigurationError):
        parse_config({
            "experiment": tray_only,
            "env": {"family": "reaching", "params": {"tilt_sensitivity": 1}},
        })


def test_jobs_default_to_settings(tmp_path, monkeypatch):
    workers = []

    def pool(max_workers):
        workers.append(max_workers)
        return ThreadPoolExecutor(max_workers=max_workers)

    monkeypatch.setattr(experiment, "ProcessPoolExecutor", pool)
    monkeypatch.setattr(settings, "jobs", 2)
    config = _quick_config(jobs=None)
    assert config.experiment.jobs is None

    run_experiment(config, output_dir=tmp_path)
    assert workers == [2]
    run_experiment(config, output_dir=tmp_path, jobs=3)
    assert workers == [2, 3]
