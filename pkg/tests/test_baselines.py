import numpy as np

from src.baselines import FeatureBoxCost, fc_constraint, icrl_like
from src.core.types import DemoSet, FeatureMap, LinearRewardModel, RewardKind, Trajectory
from src.learning import TclConfig
from src.observability.diagnostics import DiagnosticsRecorder
from tests.conftest import chain_cmdp


def _chain_problem():
    cmdp = chain_cmdp(n_states=4, discount=0.9, horizon=6)
    position = np.repeat((np.arange(4) / 3.0)[:, None], 2, axis=1)
    backward = np.zeros((4, 2))
    backward[:, 0] = 1.0
    values = np.stack([position, backward], axis=2)
    features = FeatureMap(("position", "backward"), values, name="chain")
    demo = Trajectory(np.array([0, 1, 2, 3, 3, 3]), np.ones(6, dtype=np.int64), final_state=3)
    return cmdp, features, DemoSet((demo, demo), "chain")


def test_fc_box_spans_demonstrated_values():
    cmdp, features, demos = _chain_problem()
    box = fc_constraint(demos, features)
    assert box.lower.tolist() == [0.0, 0.0]
    assert box.upper.tolist() == [1.0, 0.0]
    table = box.evaluate(features)
    assert table[:, 1].tolist() == [0.0] * 4
    assert table[:, 0].tolist() == [1.0] * 4


def test_fc_cost_ignores_features_missing_from_target_map():
    box = FeatureBoxCost(("position", "elsewhere"), np.array([0.0, 0.0]), np.array([0.5, 0.0]))
    target = FeatureMap(("position",), np.array([[[0.2]], [[0.9]]]))
    assert box.evaluate(target).ravel().tolist() == [0.0, 1.0]
    unrelated = FeatureMap(("other",), np.ones((2, 1, 1)))
    assert box.evaluate(unrelated).sum() == 0.0


def test_fc_box_survives_dict_conversion():
    box = FeatureBoxCost(("a", "b"), np.array([0.0, -1.0]), np.array([1.0, 2.0]))
    again = FeatureBoxCost.from_dict(box.as_dict())
    assert again.feature_names == box.feature_names
    assert np.array_equal(again.upper, box.upper)


def test_icrl_without_free_features_returns_zero_cost():
    cmdp, features, demos = _chain_problem()
    known = LinearRewardModel.from_dict({"position": 1.0}, features.names, RewardKind.TASK)
    cost = icrl_like(demos, known, cmdp, features, free_features=[])
    assert cost.kind is RewardKind.COST
    assert np.all(cost.evaluate(features) == 0.0)


def test_icrl_learns_penalty_on_undemonstrated_behaviour():
    cmdp, features, demos = _chain_problem()
    known = LinearRewardModel.from_dict({"position": 1.0}, features.names, RewardKind.TASK)
    recorder = DiagnosticsRecorder("icrl-test", enabled=True)
    config = TclConfig(outer_iterations=30)
    cost = icrl_like(
        demos, known, cmdp, features, free_features=["backward"], config=config, recorder=recorder
    )
    assert cost.kind is RewardKind.COST
    # les démonstrations n'utilisent jamais l'action arrière
    assert cost.weight("backward") > 0.0
    assert cost.weight("position") == 0.0
    assert len(recorder) >= 1
