import numpy as np
import pytest

from src.core.types import (
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TaskRewardSpace,
    Trajectory,
)
from src.crl import generate_expert_demos
from src.exceptions import ConfigurationError, FeatureMismatchError, InvariantViolationError
from src.learning import (
    ApproximateDecompositionObjective,
    DecompositionResult,
    ExactDecompositionObjective,
    TclConfig,
    decompose_approx,
    decompose_exact,
    energy_kl,
    irl_step,
    tcl_train,
)
from src.learning.decomposition import align_to_space, center_reward, visitation_weights
from src.learning.irl import ARMIJO_FRACTION, evaluate_reward, expert_feature_expectations
from src.learning.tcl import decompose
from src.observability.diagnostics import DiagnosticsRecorder
from src.solver import soft_value_iteration
from tests.conftest import chain_cmdp, random_cmdp, random_features


def _chain_setup():
    cmdp = chain_cmdp(n_states=4, discount=0.9, horizon=8)
    position = np.repeat((np.arange(4) / 3.0)[:, None], 2, axis=1)
    end = np.repeat((np.arange(4) == 3).astype(float)[:, None], 2, axis=1)
    backward = np.zeros((4, 2))
    backward[:, 0] = 1.0
    values = np.stack([position, end, backward], axis=2)
    features = FeatureMap(("position", "end", "backward"), values, name="chain")
    states = np.array([0, 1, 2, 3, 3, 3, 3, 3])
    demo = Trajectory(states, np.ones(8, dtype=np.int64), final_state=3)
    demos = DemoSet((demo, demo, demo), "chain")
    space = TaskRewardSpace(features.names, ("position", "end"), ("end",))
    return cmdp, features, demos, space


def _random_problem(seed: int):
    cmdp = random_cmdp(seed, n_states=5, n_actions=3, discount=0.85)
    features = random_features(seed + 100, cmdp, dim=4)
    space = TaskRewardSpace(features.names, ("f0", "f1"), ("f1",), weight_bound=10.0)
    reward = LinearRewardModel(np.random.default_rng(seed).normal(size=4), features.names)
    policy = soft_value_iteration(cmdp, reward, features, tolerance=1e-13).policy
    return cmdp, features, space, reward, policy


def test_irl_step_reduces_feature_gap():
    cmdp, features, demos, _ = _chain_setup()
    reward = LinearRewardModel.zeros(features.names)
    expert = expert_feature_expectations(demos, features, reward, cmdp.discount)
    start = evaluate_reward(cmdp, features, reward, expert, 0.1)
    state = start
    for _ in range(5):
        state = irl_step(state.reward, demos, cmdp, features, previous=state)
    assert state.merit < start.merit
    assert state.reward.weight("position") > 0.0


def test_irl_line_search_accepts_only_ascent_on_objective():
    cmdp, features, demos, _ = _chain_setup()
    reward = LinearRewardModel.zeros(features.names)
    expert = expert_feature_expectations(demos, features, reward, cmdp.discount)
    start = evaluate_reward(cmdp, features, reward, expert, 50.0)
    state = irl_step(reward, demos, cmdp, features, previous=start)
    assert state.accepted
    used = state.step_size / 2.0
    assert used <= 50.0
    gain = ARMIJO_FRACTION * used * float(start.feature_gap @ start.feature_gap)
    assert state.objective >= start.objective + gain


def test_irl_step_keeps_fixed_dimensions():
    cmdp, features, demos, _ = _chain_setup()
    reward = LinearRewardModel(np.array([0.0, 0.0, -0.7]), features.names)
    mask = np.array([True, True, False])
    state = irl_step(reward, demos, cmdp, features, free_mask=mask)
    assert state.reward.weight("backward") == -0.7


def test_irl_fixed_step_schedule_does_not_backtrack():
    cmdp, features, demos, _ = _chain_setup()
    reward = LinearRewardModel.zeros(features.names)
    state = irl_step(reward, demos, cmdp, features, step_size=0.3, line_search=False)
    expert = expert_feature_expectations(demos, features, reward, cmdp.discount)
    initial = evaluate_reward(cmdp, features, reward, expert, 0.3)
    assert np.allclose(state.reward.weights, 0.3 * initial.feature_gap)
    assert state.step_size == 0.3


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_exact_gradient_matches_central_differences(seed):
    cmdp, features, space, _, policy = _random_problem(seed)
    raw = np.random.default_rng(seed + 7).normal(size=4) + np.array([0.0, 1.0, 0.0, 0.0])
    weights = space.project(raw)
    objective = ExactDecompositionObjective(
        cmdp,
        features,
        policy,
        space,
        visitation_weights(cmdp, policy),
        epsilon=0.0,
        tolerance=1e-13,
    )
    _, grad = objective.value_and_grad(weights)

    h = 1e-5
    numeric = np.zeros(4)
    for i in space.basis_indices:
        step = np.zeros(4)
        step[i] = h
        upper, lower = objective.value(weights + step)[0], objective.value(weights - step)[0]
        numeric[i] = (upper - lower) / (2 * h)
    basis = space.basis_indices
    scale = max(np.max(np.abs(numeric[basis])), 1e-8)
    assert np.max(np.abs(grad[basis] - numeric[basis])) / scale < 1e-4


@pytest.mark.parametrize("seed", [3, 4])
def test_approximate_gradient_matches_central_differences(seed):
    cmdp, features, space, _, policy = _random_problem(seed)
    objective = ApproximateDecompositionObjective(
        cmdp, features, policy, space, visitation_weights(cmdp, policy), alpha=1.5, epsilon=0.0
    )
    x = np.random.default_rng(seed).normal(size=cmdp.n_states * cmdp.n_actions + len(space.basis))
    _, grad = objective.value_and_grad(x)

    h = 1e-6
    numeric = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        upper = objective.value_and_grad(x + step)[0]
        lower = objective.value_and_grad(x - step)[0]
        numeric[i] = (upper - lower) / (2 * h)
    assert np.max(np.abs(grad - numeric)) / max(np.max(np.abs(numeric)), 1e-8) < 1e-4


def test_energy_kl_is_invariant_to_per_state_shifts():
    rng = np.random.default_rng(0)
    q_p, q = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    weights = np.array([0.2, 0.3, 0.5])
    shifted = energy_kl(q_p + rng.normal(size=(3, 1)), q + rng.normal(size=(3, 1)), weights)
    assert shifted == pytest.approx(energy_kl(q_p, q, weights), abs=1e-12)
    assert energy_kl(q, q, weights) == pytest.approx(0.0, abs=1e-15)


def test_reward_inside_task_space_is_its_own_task_part():
    cmdp, features, space, _, _ = _random_problem(5)
    reward = LinearRewardModel(np.array([0.8, 0.4, 0.0, 0.0]), features.names)
    policy = soft_value_iteration(cmdp, reward, features, tolerance=1e-13).policy
    config = TclConfig(tie_break_epsilon=0.0)
    result = decompose_exact(reward, policy, space, cmdp, features, config)
    assert np.allclose(result.r_p.weights, reward.weights, atol=1e-6)
    assert np.allclose(result.r_c.weights, 0.0, atol=1e-6)
    assert result.kl_value < 1e-8


@pytest.mark.parametrize("mode", ["exact", "approximate"])
def test_decomposition_is_additive_and_respects_task_space(mode):
    cmdp, features, space, reward, policy = _random_problem(6)
    config = TclConfig(rd_max_iterations=40)
    if mode == "exact":
        result = decompose_exact(reward, policy, space, cmdp, features, config)
    else:
        result = decompose_approx(reward, policy, space, cmdp, features, alpha=1.0, config=config)
    total = result.r_p.weights + result.r_c.weights
    assert np.allclose(total, reward.weights, atol=1e-12, rtol=0.0)
    assert space.contains(result.r_p)
    assert result.r_p.kind is RewardKind.TASK and result.r_c.kind is RewardKind.RESIDUAL
    assert result.kl_value >= 0.0
    assert result.mode == mode


def test_decomposition_lowers_kl_from_projection():
    cmdp, features, space, reward, policy = _random_problem(8)
    weights = visitation_weights(cmdp, policy)
    objective = ExactDecompositionObjective(cmdp, features, policy, space, weights)
    start_kl = objective.kl(objective.solve(space.project(reward.weights)).policy)
    config = TclConfig(rd_max_iterations=60, tie_break_epsilon=0.0)
    result = decompose_exact(reward, policy, space, cmdp, features, config)
    assert result.kl_value <= start_kl + 1e-9


def test_cost_model_is_negated_residual():
    cmdp, features, space, reward, policy = _random_problem(9)
    result = decompose_exact(reward, policy, space, cmdp, features, TclConfig(rd_max_iterations=5))
    cost = result.cost_model()
    assert cost.kind is RewardKind.COST
    assert np.array_equal(cost.weights, -result.r_c.weights)


def test_result_rejects_broken_additivity():
    names = ("a", "b")
    r = LinearRewardModel(np.array([1.0, 1.0]), names)
    with pytest.raises(InvariantViolationError):
        DecompositionResult(
            r_overall=r,
            r_p=LinearRewardModel(np.array([1.0, 0.0]), names, RewardKind.TASK),
            r_c=LinearRewardModel(np.array([0.0, 0.5]), names, RewardKind.RESIDUAL),
            kl_value=0.0,
            bellman_penalty=0.0,
            alpha=0.0,
            iterations=0,
        )


def test_negative_alpha_is_rejected():
    cmdp, features, space, reward, policy = _random_problem(10)
    with pytest.raises(ConfigurationError):
        decompose_approx(reward, policy, space, cmdp, features, alpha=-1.0)


def test_align_to_space_requires_same_features():
    space = TaskRewardSpace(("a", "b"), ("a",))
    with pytest.raises(FeatureMismatchError):
        align_to_space(LinearRewardModel.zeros(("a", "c")), space)
    aligned = align_to_space(LinearRewardModel(np.array([2.0, 1.0]), ("b", "a")), space)
    assert aligned.weights.tolist() == [1.0, 2.0]


def test_rd_mode_accepts_short_alias():
    assert TclConfig(rd_mode="approx").rd_mode == "approximate"


def test_tcl_records_diagnostics_every_outer_iteration():
    cmdp, features, demos, space = _chain_setup()
    recorder = DiagnosticsRecorder("tcl-test", enabled=True)
    config = TclConfig(outer_iterations=4, decomposition_interval=2, rd_max_iterations=10)
    result = tcl_train(demos, cmdp, features, space, config, recorder)

    frame = recorder.to_dataframe()
    assert 1 <= len(frame) <= 4
    assert frame["kl_value"].notna().sum() == (frame["iteration"] % 2 == 0).sum()
    assert space.contains(result.r_p)
    assert "irl_iterations" in result.diagnostics


@pytest.mark.slow
def test_tcl_on_reaching_finds_hazard_as_residual(reaching_env):
    demos = generate_expert_demos(reaching_env, 16, seed=1)
    config = TclConfig(outer_iterations=60, decomposition_interval=10)
    env = reaching_env
    result = tcl_train(demos, env.cmdp, env.features, env.task_space, config)
    assert result.r_c.weight("hazard") < 0.0
    assert result.r_c.weight("goal_distance") == pytest.approx(
        result.r_overall.weight("goal_distance") - result.r_p.weight("goal_distance")
    )


def _biased_problem(seed: int):
    """Features aléatoires plus une colonne constante "bias" hors de R_p."""
    cmdp = random_cmdp(seed, n_states=5, n_actions=3, discount=0.85)
    base = random_features(seed + 100, cmdp, dim=3)
    values = np.concatenate([base.values, np.ones((cmdp.n_states, cmdp.n_actions, 1))], axis=2)
    features = FeatureMap((*base.names, "bias"), values, name="biased")
    space = TaskRewardSpace(features.names, ("f0", "f1"), ("f1",), weight_bound=10.0)
    return cmdp, features, space


def test_centered_reward_has_zero_mean_on_visited_support():
    cmdp, features, _ = _biased_problem(2)
    reward = LinearRewardModel(np.array([0.4, -0.2, 0.7, 1.5]), features.names)
    policy = soft_value_iteration(cmdp, reward, features, tolerance=1e-13).policy
    centered = center_reward(reward, features, cmdp, policy)
    rho = visitation_weights(cmdp, policy)[:, None] * policy.probs

    assert centered.constant_direction
    assert np.sum(rho * centered.reward.raw_values(features)) == pytest.approx(0.0, abs=1e-10)
    assert np.sum(rho * reward.raw_values(centered.features)) == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(centered.reward.weights[:3], reward.weights[:3], atol=1e-10)
    assert centered.offset == pytest.approx(np.sum(rho * reward.raw_values(features)), abs=1e-10)


def test_centering_without_constant_feature_keeps_weights():
    cmdp, features, _, reward, policy = _random_problem(3)
    centered = center_reward(reward, features, cmdp, policy)
    assert not centered.constant_direction
    assert np.array_equal(centered.reward.weights, reward.weights)


@pytest.mark.parametrize("mode", ["exact", "approx"])
def test_constant_shift_of_reward_gives_same_residual(mode):
    cmdp, features, space = _biased_problem(4)
    weights = np.array([0.5, 0.3, -0.8, 0.0])
    config = TclConfig(rd_mode=mode, rd_max_iterations=30)
    results = []
    for shift in (0.0, 2.5):
        reward = LinearRewardModel(weights + shift * np.eye(4)[3], features.names)
        state = evaluate_reward(cmdp, features, reward, np.zeros(4), 0.1)
        results.append(decompose(state, space, cmdp, features, config))

    plain, shifted = results
    assert np.allclose(plain.r_c.weights, shifted.r_c.weights, atol=1e-5)
    assert np.allclose(plain.r_p.weights, shifted.r_p.weights, atol=1e-5)
    offset = shifted.diagnostics["reward_offset"] - plain.diagnostics["reward_offset"]
    assert offset == pytest.approx(2.5, abs=1e-6)
