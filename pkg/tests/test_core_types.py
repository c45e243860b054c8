import numpy as np
import pytest
import scipy.sparse as sp

from src.core.types import (
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    TaskRewardSpace,
    Trajectory,
    cost_from_residual,
)
from src.exceptions import (
    ArgumentError,
    ConfigurationError,
    FeatureMismatchError,
    InvariantViolationError,
)
from src.observability.diagnostics import warning_counts


def _features(names=("a", "b", "c")):
    values = np.arange(2 * 2 * len(names), dtype=float).reshape(2, 2, len(names))
    return FeatureMap(names, values, name="toy")


def test_cmdp_rejects_unnormalized_rows():
    transition = np.full((2, 1, 2), 0.4)
    with pytest.raises(InvariantViolationError):
        TabularCMDP.from_dense(transition, np.array([1.0, 0.0]), 0.9, 5)


def test_cmdp_rejects_bad_start_distribution():
    transition = np.full((2, 1, 2), 0.5)
    with pytest.raises(InvariantViolationError):
        TabularCMDP.from_dense(transition, np.array([0.7, 0.7]), 0.9, 5)


def test_cmdp_rejects_discount_out_of_range():
    transition = np.full((2, 1, 2), 0.5)
    with pytest.raises(ConfigurationError):
        TabularCMDP.from_dense(transition, np.array([1.0, 0.0]), 1.5, 5)


def test_terminal_state_must_self_loop():
    transition = np.full((2, 1, 2), 0.5)
    with pytest.raises(InvariantViolationError):
        TabularCMDP.from_dense(transition, np.array([1.0, 0.0]), 0.9, 5, terminal_states=[1])


def test_cmdp_sparse_accessors(chain):
    states, probs = chain.successors(1, 1)
    assert states.tolist() == [2]
    assert probs.tolist() == [1.0]
    assert chain.probability(0, 0, 0) == 1.0
    assert chain.transition_tensor().shape == (4, 2, 4)
    assert isinstance(chain.transition_t, sp.csr_matrix)
    assert np.allclose(chain.expected_next(np.arange(4.0))[:, 1], [1, 2, 3, 3])


def test_feature_map_resolve_and_missing_names():
    features = _features()
    assert features.resolve(["c", "a"]).tolist() == [2, 0]
    with pytest.raises(FeatureMismatchError) as info:
        features.resolve(["a", "zzz"])
    assert info.value.missing == ["zzz"]
    assert info.value.exit_code == 5


def test_feature_map_rejects_duplicate_names():
    with pytest.raises(ConfigurationError):
        FeatureMap(("a", "a"), np.zeros((1, 1, 2)))


def test_linear_model_evaluates_by_name_on_reordered_map():
    model = LinearRewardModel.from_dict({"a": 1.0, "c": -2.0}, ("a", "b", "c"))
    reordered = FeatureMap(("c", "b", "a"), _features().values[:, :, ::-1])
    assert np.allclose(model.evaluate(reordered), model.evaluate(_features()))


def test_linear_model_from_dict_rejects_unknown_features():
    with pytest.raises(FeatureMismatchError):
        LinearRewardModel.from_dict({"nope": 1.0}, ("a", "b"))


def test_negative_cost_raises_without_clamp():
    cost = LinearRewardModel(np.array([-1.0, 0.0, 0.0]), ("a", "b", "c"), RewardKind.COST)
    with pytest.raises(InvariantViolationError):
        cost.evaluate(_features())


def test_cost_from_residual_clamps_and_counts():
    residual = LinearRewardModel(np.array([1.0, 0.0, 0.0]), ("a", "b", "c"), RewardKind.RESIDUAL)
    cost = cost_from_residual(residual)
    table = cost.evaluate(_features())
    assert cost.kind is RewardKind.COST
    assert np.all(table >= 0.0)
    assert warning_counts["cost_clamped"] > 0


def test_addition_requires_same_feature_map():
    left = LinearRewardModel.zeros(("a", "b"))
    right = LinearRewardModel.zeros(("b", "a"))
    with pytest.raises(ConfigurationError):
        left + right


def test_aligned_to_fills_missing_weights_with_zero():
    model = LinearRewardModel.from_dict({"b": 2.0}, ("b",))
    aligned = model.aligned_to(_features())
    assert aligned.feature_names == ("a", "b", "c")
    assert aligned.weights.tolist() == [0.0, 2.0, 0.0]


def test_task_space_projection_is_idempotent():
    space = TaskRewardSpace(("a", "b", "c"), ("a", "b"), ("b",), weight_bound=5.0)
    projected = space.project(np.array([10.0, -3.0, 7.0]))
    assert projected.tolist() == [5.0, 0.0, 0.0]
    assert np.array_equal(space.project(projected), projected)


def test_task_space_contains_checks_basis_and_signs():
    space = TaskRewardSpace(("a", "b", "c"), ("a", "b"), ("b",))
    names = ("a", "b", "c")
    assert space.contains(LinearRewardModel(np.array([-1.0, 1.0, 0.0]), names))
    assert not space.contains(LinearRewardModel(np.array([0.0, 0.0, 1.0]), names))
    assert not space.contains(LinearRewardModel(np.array([0.0, -1.0, 0.0]), names))


def test_task_space_rejects_unknown_basis():
    with pytest.raises(FeatureMismatchError):
        TaskRewardSpace(("a",), ("b",))


def test_trajectory_visited_states_include_final():
    traj = Trajectory(np.array([0, 1]), np.array([1, 1]), final_state=2)
    assert len(traj) == 2
    assert traj.visited_states().tolist() == [0, 1, 2]
    assert traj.steps == [(0, 1), (1, 1)]


def test_empty_demo_set_is_rejected():
    with pytest.raises(ArgumentError):
        DemoSet((), "empty")


def test_demo_set_concatenates_pairs(chain_demos):
    states, actions = chain_demos.state_actions()
    assert states.tolist() == [0, 1, 2, 0, 1, 2]
    assert chain_demos.total_steps == 6


def test_task_space_projection_properties_on_random_weights():
    space = TaskRewardSpace(("a", "b", "c", "d"), ("a", "b", "c"), ("c",), weight_bound=2.0)
    for seed in range(200):
        weights = np.random.default_rng(seed).normal(scale=3.0, size=4)
        projected = space.project(weights)
        assert np.array_equal(space.project(projected), projected)
        assert space.contains(LinearRewardModel(projected, space.feature_names))
        assert np.all(np.abs(projected) <= 2.0)
