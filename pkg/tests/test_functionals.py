import json

import numpy as np
import pytest

from src.core.functionals import (
    cumulative_cost,
    discounted_return,
    feature_expectations,
    validate_trajectory,
)
from src.core.serialization import (
    cmdp_from_dict,
    cmdp_to_dict,
    demos_from_dict,
    demos_to_dict,
    model_from_dict,
    model_to_dict,
)
from src.core.types import FeatureMap, LinearRewardModel, RewardKind, Trajectory
from src.exceptions import ArgumentError, ConfigurationError, InvariantViolationError


def _chain_features(chain):
    # feature 0: position normalisée, feature 1: indicateur de l'état 3
    position = np.repeat((np.arange(chain.n_states) / 3.0)[:, None], chain.n_actions, axis=1)
    is_end = (np.arange(chain.n_states) == 3).astype(float)
    end = np.repeat(is_end[:, None], chain.n_actions, axis=1)
    return FeatureMap(("position", "end"), np.stack([position, end], axis=2), name="chain")


def test_discounted_return_starts_at_t_zero(chain):
    features = _chain_features(chain)
    r = LinearRewardModel.from_dict({"position": 3.0}, features.names)
    traj = Trajectory(np.array([0, 1, 2]), np.array([1, 1, 1]))
    # 0 + 0.5·1 + 0.25·2
    assert discounted_return(traj, r, features, 0.5) == pytest.approx(1.0)


def test_discounted_return_rejects_empty_trajectory(chain):
    features = _chain_features(chain)
    empty = Trajectory(np.array([]), np.array([]))
    with pytest.raises(ArgumentError):
        discounted_return(empty, LinearRewardModel.zeros(features.names), features, 0.9)


def test_cumulative_cost_is_undiscounted(chain):
    features = _chain_features(chain)
    c = LinearRewardModel.from_dict({"end": 1.0}, features.names, RewardKind.COST)
    traj = Trajectory(np.array([2, 3, 3]), np.array([1, 1, 0]))
    assert cumulative_cost(traj, c, features) == 2.0


def test_cumulative_cost_rejects_reward_model(chain):
    features = _chain_features(chain)
    r = LinearRewardModel.from_dict({"end": 1.0}, features.names, RewardKind.TASK)
    with pytest.raises(ConfigurationError):
        cumulative_cost(Trajectory(np.array([0]), np.array([0])), r, features)


def test_feature_expectations_average_over_demos(chain, chain_demos):
    features = _chain_features(chain)
    expected = np.array([0.0 + 0.5 / 3.0 + 0.25 * 2.0 / 3.0, 0.0])
    assert np.allclose(feature_expectations(chain_demos, features, 0.5), expected)


def test_validate_trajectory_detects_impossible_transition(chain):
    validate_trajectory(Trajectory(np.array([0, 1]), np.array([1, 1]), final_state=2), chain)
    with pytest.raises(InvariantViolationError):
        validate_trajectory(Trajectory(np.array([0, 2]), np.array([1, 1])), chain)


def test_cmdp_document_survives_json(chain):
    doc = json.loads(json.dumps(cmdp_to_dict(chain)))
    rebuilt = cmdp_from_dict(doc)
    assert rebuilt.name == chain.name
    assert (rebuilt.transition != chain.transition).nnz == 0
    assert np.array_equal(rebuilt.start_dist, chain.start_dist)


def test_model_document_keeps_kind_and_clamp():
    model = LinearRewardModel(
        np.array([0.1, -2.5]), ("x", "y"), RewardKind.COST, clamp_nonnegative=True
    )
    rebuilt = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    assert rebuilt.kind is RewardKind.COST
    assert rebuilt.clamp_nonnegative
    assert np.array_equal(rebuilt.weights, model.weights)


def test_demos_document_keeps_final_states(chain_demos):
    rebuilt = demos_from_dict(json.loads(json.dumps(demos_to_dict(chain_demos))))
    assert rebuilt.env_id == "chain"
    assert [t.final_state for t in rebuilt] == [3, 3]


def test_incomplete_document_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        cmdp_from_dict({"n_states": 2})
