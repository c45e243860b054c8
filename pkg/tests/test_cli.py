import json

import pandas as pd
import pytest

from src.cli.commands import parse_task_reward
from src.cli.config_schema import parse_config
from src.cli.main import main
from src.exceptions import ArgumentError, ConfigurationError

TINY_TOML = """
[env]
family = "reaching"
grid = 7
horizon = 15
seed = 2

[demos]
n = 3

[learn]
outer_iterations = 5
decomposition_interval = 5

[transfer]
max_iterations = 100

[eval]
rollouts = 2
correlation_samples = 20
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path


def test_parse_task_reward():
    expected = {"at_goal": 1.0, "goal_distance": -0.1}
    assert parse_task_reward("at_goal=1, goal_distance=-0.1") == expected
    assert parse_task_reward(None) is None
    for text in ("at_goal", "=1", "at_goal=high", ","):
        with pytest.raises(ArgumentError):
            parse_task_reward(text)


def test_unknown_config_key_is_rejected():
    with pytest.raises(ConfigurationError):
        parse_config({"learn": {"methd": "tcl"}})
    with pytest.raises(ConfigurationError):
        parse_config({"experiment": {"families": ["kitchen"]}})


def test_no_command_prints_help():
    assert main([]) == 0


def test_invalid_demo_count_exits_with_configuration_code(tiny_config, tmp_path):
    out = str(tmp_path / "d.json")
    assert main(["demos", "--config", str(tiny_config), "--n", "0", "--out", out]) == 2


def test_missing_archive_exits_with_configuration_code(tmp_path):
    assert main(["learn", str(tmp_path / "absent.json"), "--out", str(tmp_path / "m.json")]) == 2


def test_pipeline_commands_chain_through_archives(tiny_config, tmp_path):
    demos, model = tmp_path / "demos.json", tmp_path / "model.json"
    rollouts, metrics = tmp_path / "rollouts.json", tmp_path / "metrics.csv"

    assert main(["demos", "--config", str(tiny_config), "--seed", "1", "--out", str(demos)]) == 0
    doc = json.loads(demos.read_text(encoding="utf-8"))
    assert doc["format_version"] == 1 and doc["kind"] == "demos"
    assert len(doc["demos"]["trajectories"]) == 3

    learn_args = ["--config", str(tiny_config), "--method", "fc", "--out", str(model)]
    assert main(["learn", str(demos), *learn_args]) == 0
    assert json.loads(model.read_text(encoding="utf-8"))["constraint"]["method"] == "fc"

    assert main([
        "transfer", str(model), "--config", str(tiny_config),
        "--task-reward", "at_goal=1,goal_distance=-0.1", "--seed", "4", "--out", str(rollouts),
    ]) == 0
    assert main(["eval", str(rollouts), "--out", str(metrics)]) == 0
    frame = pd.read_csv(metrics)
    assert frame["method"].tolist() == ["fc"]
    assert 0.0 <= frame["violation_rate"].iloc[0] <= 1.0


def test_off_basis_task_reward_exits_with_configuration_code(tiny_config, tmp_path):
    demos, model = tmp_path / "demos.json", tmp_path / "model.json"
    assert main(["demos", "--config", str(tiny_config), "--out", str(demos)]) == 0
    learn_args = ["--config", str(tiny_config), "--method", "fc", "--out", str(model)]
    assert main(["learn", str(demos), *learn_args]) == 0
    code = main([
        "transfer", str(model), "--config", str(tiny_config),
        "--task-reward", "hazard=-1", "--out", str(tmp_path / "r.json"),
    ])
    assert code == 2


def test_unknown_builder_param_exits_with_configuration_code(tmp_path):
    path = tmp_path / "bogus.toml"
    document = TINY_TOML.replace("seed = 2", "seed = 2\nparams = { bogus = 1 }")
    path.write_text(document, encoding="utf-8")
    assert main(["demos", "--config", str(path), "--out", str(tmp_path / "d.json")]) == 2
    assert main(["experiment", str(path), "--out-dir", str(tmp_path / "run")]) == 2
    assert not (tmp_path / "run").exists()
