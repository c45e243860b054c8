import itertools

import numpy as np
import pytest
from scipy.special import logsumexp

from src.core.types import LinearRewardModel, TabularCMDP
from src.exceptions import ConfigurationError
from src.solver import BoltzmannPolicy, boltzmann_policy, soft_value_iteration
from src.solver.soft_value_iteration import PROBABILITY_FLOOR
from tests.conftest import random_cmdp


def _deterministic_cmdp(seed: int, n_states: int = 3, n_actions: int = 2, horizon: int = 3):
    rng = np.random.default_rng(seed)
    transition = np.zeros((n_states, n_actions, n_states))
    nxt = rng.integers(0, n_states, size=(n_states, n_actions))
    for s in range(n_states):
        for a in range(n_actions):
            transition[s, a, nxt[s, a]] = 1.0
    start = np.full(n_states, 1.0 / n_states)
    return TabularCMDP.from_dense(transition, start, 1.0, horizon), nxt


def test_finite_horizon_matches_path_enumeration():
    cmdp, nxt = _deterministic_cmdp(4)
    reward = np.random.default_rng(5).normal(size=(cmdp.n_states, cmdp.n_actions))
    solution = soft_value_iteration(cmdp, reward, finite_horizon=True)

    for s0 in range(cmdp.n_states):
        returns = []
        for plan in itertools.product(range(cmdp.n_actions), repeat=cmdp.horizon):
            s, total = s0, 0.0
            for a in plan:
                total += reward[s, a]
                s = nxt[s, a]
            returns.append(total)
        assert solution.v[s0] == pytest.approx(logsumexp(returns), abs=1e-10)


def test_finite_horizon_matches_stochastic_recursion():
    cmdp = random_cmdp(7, n_states=3, n_actions=2, discount=0.8, horizon=4)
    reward = np.random.default_rng(8).normal(size=(3, 2))
    tensor = cmdp.transition_tensor()

    def value(s, steps):
        if steps == 0:
            return 0.0
        q = [
            reward[s, a] + 0.8 * sum(tensor[s, a, t] * value(t, steps - 1) for t in range(3))
            for a in range(2)
        ]
        return logsumexp(q)

    solution = soft_value_iteration(cmdp, reward, finite_horizon=True)
    assert np.allclose(solution.v, [value(s, 4) for s in range(3)], atol=1e-10)


def test_stationary_solution_is_a_fixed_point(tiny_cmdp):
    reward = np.random.default_rng(2).normal(size=(tiny_cmdp.n_states, tiny_cmdp.n_actions))
    solution = soft_value_iteration(tiny_cmdp, reward, tolerance=1e-12)
    q = solution.q.values
    backup = reward + tiny_cmdp.discount * tiny_cmdp.expected_next(logsumexp(q, axis=1))
    assert solution.q.converged
    assert np.max(np.abs(backup - q)) < 1e-10


def test_action_independent_problem_gives_uniform_policy():
    row = np.array([0.2, 0.3, 0.5])
    transition = np.broadcast_to(row, (3, 4, 3)).copy()
    cmdp = TabularCMDP.from_dense(transition, row, 0.9, 10)
    reward = np.repeat(np.array([1.0, -2.0, 0.5])[:, None], 4, axis=1)
    solution = soft_value_iteration(cmdp, reward)
    assert np.allclose(solution.policy.probs, 0.25)


def test_warm_start_reaches_same_solution(tiny_cmdp, tiny_features):
    reward = LinearRewardModel(np.array([0.5, -1.0, 0.2]), tiny_features.names)
    cold = soft_value_iteration(tiny_cmdp, reward, tiny_features, tolerance=1e-12)
    warm = soft_value_iteration(
        tiny_cmdp, reward, tiny_features, tolerance=1e-12, init_q=cold.q.values + 1.0
    )
    assert np.allclose(cold.q.values, warm.q.values, atol=1e-9)


def test_linear_reward_requires_features(tiny_cmdp, tiny_features):
    with pytest.raises(ConfigurationError):
        soft_value_iteration(tiny_cmdp, LinearRewardModel.zeros(tiny_features.names))


def test_undiscounted_without_terminal_state_needs_finite_horizon():
    cmdp, _ = _deterministic_cmdp(1)
    with pytest.raises(ConfigurationError):
        soft_value_iteration(cmdp, np.zeros((3, 2)))


def test_policy_probabilities_stay_positive():
    policy = boltzmann_policy(np.array([[0.0, -2000.0], [1.0, 1.0]]))
    assert np.all(policy.probs >= PROBABILITY_FLOOR)
    assert np.allclose(policy.probs.sum(axis=1), 1.0)


def test_uniform_policy_entropy():
    policy = BoltzmannPolicy.uniform(2, 4)
    assert np.allclose(policy.entropy(), np.log(4.0))
