import pytest

from src.envs import build_env, build_training_env, sample_eval_suite
from src.envs.suite import builder_parameters
from src.envs.common import EnvSpec
from src.exceptions import ArgumentError, ConfigurationError


def test_suite_is_deterministic_for_a_seed():
    kwargs = dict(seed=5, mode="random", grid=7, overrides={"horizon": 15})
    first = sample_eval_suite("reaching", 4, **kwargs)
    second = sample_eval_suite("reaching", 4, **kwargs)
    assert [env.fingerprint() for env in first] == [env.fingerprint() for env in second]
    assert len({env.name for env in first}) == 4


def test_demo_like_reaching_stays_within_one_bin():
    training = build_training_env("reaching", 5, grid=9)
    suite = sample_eval_suite("reaching", 6, seed=5, mode="demo_like", grid=9)
    sx, sy = training.spec.params["start"]
    gx, gy = training.spec.params["goal"]
    for env in suite:
        start, goal = env.spec.params["start"], env.spec.params["goal"]
        assert abs(start[0] - sx) <= 1 and abs(start[1] - sy) <= 1
        assert abs(goal[0] - gx) <= 1 and abs(goal[1] - gy) <= 1


def test_tray_overrides_reach_every_instance():
    suite = sample_eval_suite(
        "tray", 3, seed=1, mode="random", grid=(7, 9), overrides={"tilt_sensitivity": 2}
    )
    assert all(env.spec.params["tilt_sensitivity"] == 2 for env in suite)
    assert all(len(env.configurations) == 1 for env in suite)


def test_instances_rebuild_from_their_recipe():
    for env in sample_eval_suite("wiping", 2, seed=3, mode="random", grid=11):
        assert build_env(env.spec).fingerprint() == env.fingerprint()


def test_suite_rejects_unknown_inputs():
    with pytest.raises(ArgumentError):
        sample_eval_suite("kitchen", 2, seed=0)
    with pytest.raises(ArgumentError):
        sample_eval_suite("reaching", 2, seed=0, mode="adversarial")
    with pytest.raises(ArgumentError):
        sample_eval_suite("reaching", 0, seed=0)


def test_build_env_rejects_unknown_family():
    with pytest.raises(ArgumentError):
        build_env(EnvSpec(family="kitchen", seed=0))


def test_builder_parameters_exclude_registry_arguments():
    params = builder_parameters("tray")
    assert "tilt_sensitivity" in params and "configurations" in params
    assert "seed" not in params and "grid" not in params


def test_unknown_builder_keyword_is_a_configuration_error():
    with pytest.raises(ConfigurationError, match="bogus"):
        build_training_env("reaching", 0, grid=7, bogus=1)
    with pytest.raises(ConfigurationError, match="bogus"):
        sample_eval_suite("reaching", 2, seed=0, grid=7, overrides={"bogus": 1})
    with pytest.raises(ConfigurationError):
        sample_eval_suite("reaching", 2, seed=0, grid=7, training_params={"tilt_sensitivity": 2})
    with pytest.raises(ConfigurationError):
        build_env(EnvSpec(family="wall", seed=0, grid=11, params={"amplitude": 0.1}))


def test_demo_like_tray_follows_training_configurations():
    suite = sample_eval_suite(
        "tray", 5, seed=2, mode="demo_like", grid=(9, 9),
        training_params={"configurations": [[1, 6]]},
    )
    for env in suite:
        [(start, goal)] = env.spec.params["configurations"]
        assert abs(start - 1) <= 1 and abs(goal - 6) <= 1


def test_demo_like_wiping_follows_training_columns():
    training = {"start_col": 4, "goal_col": 7}
    suite = sample_eval_suite(
        "wiping", 4, seed=1, mode="demo_like", grid=11, training_params=training
    )
    for env in suite:
        assert abs(env.spec.params["start_col"] - 4) <= 1
        assert abs(env.spec.params["goal_col"] - 7) <= 1
