import numpy as np
import pytest

from src.core.types import FeatureMap, LinearRewardModel, RewardKind, Trajectory
from src.evaluation.metrics import (
    correlation_samples,
    count_violations,
    decomposition_correlation,
    per_environment_correlations,
    residual_values,
    success_rate,
    violation_rate,
)
from src.exceptions import ArgumentError, UndefinedCorrelationError


@pytest.fixture
def marked_features():
    # l'état 3 est interdit, quelle que soit l'action
    values = np.zeros((5, 2, 1))
    values[3] = 1.0
    return FeatureMap(("forbidden",), values)


def _traj(states):
    return Trajectory(np.array(states), np.zeros(len(states), dtype=np.int64))


def test_violation_rate_is_pooled_over_steps(marked_features):
    cost = LinearRewardModel.from_dict({"forbidden": 1.0}, marked_features.names, RewardKind.COST)
    trajs = [
        _traj([0, 1, 2, 3, 3, 3, 4, 4, 4, 4] + [0] * 20),
        _traj([3, 0, 0, 0, 0, 0, 0, 0, 0, 0]),
    ]
    assert count_violations(trajs, cost, marked_features) == (4, 40)
    assert violation_rate(trajs, cost, marked_features) == pytest.approx(0.1)


def test_violation_rate_rejects_degenerate_inputs(marked_features):
    cost = LinearRewardModel.from_dict({"forbidden": 1.0}, marked_features.names, RewardKind.COST)
    with pytest.raises(ArgumentError):
        violation_rate([], cost, marked_features)
    with pytest.raises(ArgumentError):
        empty = Trajectory(np.array([], dtype=np.int64), np.array([], dtype=np.int64))
        violation_rate([empty], cost, marked_features)


def test_success_requires_goal_and_no_violation(reaching_env):
    table = reaching_env.cost_table()
    goal = int(np.flatnonzero(reaching_env.goal_mask)[0])
    start = int(np.flatnonzero(reaching_env.cmdp.start_dist)[0])
    hazard = int(np.flatnonzero(table[:, 0] > 0.0)[0])
    clean = Trajectory(np.array([start, goal]), np.array([0, 0]))
    dirty = Trajectory(np.array([hazard, goal]), np.array([0, 0]))
    stuck = Trajectory(np.array([start]), np.array([0]))
    success, completion = success_rate([clean, dirty, stuck, clean], reaching_env)
    assert success == pytest.approx(0.5)
    assert completion == pytest.approx(0.75)


def test_residual_values_negate_costs(reaching_env):
    _, truth_c = reaching_env.ground_truth
    features, expected = reaching_env.features, -reaching_env.cost_table()
    assert np.array_equal(residual_values(truth_c, features), expected)
    assert np.array_equal(residual_values(reaching_env.expert_cost, features), expected)


def test_correlation_is_symmetric_and_signed(reaching_env):
    truth_p, _ = reaching_env.ground_truth
    flipped = truth_p.scaled(-2.0)
    envs = [reaching_env]
    assert decomposition_correlation(truth_p, truth_p, envs, 50, seed=0) == pytest.approx(1.0)
    forward = decomposition_correlation(truth_p, flipped, envs, 50, seed=0)
    backward = decomposition_correlation(flipped, truth_p, envs, 50, seed=0)
    assert forward == pytest.approx(-1.0)
    assert forward == pytest.approx(backward)


def test_constant_reward_has_undefined_correlation(reaching_env):
    truth_p, _ = reaching_env.ground_truth
    zero = LinearRewardModel.zeros(reaching_env.features.names, RewardKind.RESIDUAL)
    with pytest.raises(UndefinedCorrelationError):
        decomposition_correlation(zero, truth_p, [reaching_env], 50, seed=0)
    assert np.isnan(per_environment_correlations(zero, truth_p, [reaching_env], 50, seed=0)[0])


def test_correlation_samples_are_reproducible(reaching_env):
    truth_p, truth_c = reaching_env.ground_truth
    first = correlation_samples(truth_p, truth_c, [reaching_env], 20, seed=4)
    second = correlation_samples(truth_p, truth_c, [reaching_env], 20, seed=4)
    assert np.array_equal(first[0][0], second[0][0])
    with pytest.raises(ArgumentError):
        correlation_samples(truth_p, truth_c, [], 20, seed=4)
    with pytest.raises(ArgumentError):
        correlation_samples(truth_p, truth_c, [reaching_env], 1, seed=4)
