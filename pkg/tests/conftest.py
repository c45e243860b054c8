import numpy as np
import pytest

from src.core.types import DemoSet, FeatureMap, TabularCMDP, Trajectory
from src.envs import build_reaching_env
from src.observability.diagnostics import reset_warning_counts


def random_cmdp(
    seed: int, n_states: int = 4, n_actions: int = 3, discount: float = 0.9, horizon: int = 20
):
    """Petit CMDP stochastique dense (toutes les transitions possibles)."""
    rng = np.random.default_rng(seed)
    transition = rng.random((n_states, n_actions, n_states)) + 0.1
    transition /= transition.sum(axis=2, keepdims=True)
    start = rng.random(n_states) + 0.1
    return TabularCMDP.from_dense(
        transition, start / start.sum(), discount, horizon, name=f"random-{seed}"
    )


def chain_cmdp(n_states: int = 4, discount: float = 0.9, horizon: int = 10):
    """Chaîne déterministe: action 0 recule, action 1 avance (bords absorbants)."""
    transition = np.zeros((n_states, 2, n_states))
    for s in range(n_states):
        transition[s, 0, max(0, s - 1)] = 1.0
        transition[s, 1, min(n_states - 1, s + 1)] = 1.0
    start = np.zeros(n_states)
    start[0] = 1.0
    return TabularCMDP.from_dense(transition, start, discount, horizon, name="chain")


def random_features(seed: int, cmdp: TabularCMDP, dim: int = 3) -> FeatureMap:
    rng = np.random.default_rng(seed)
    values = rng.normal(size=(cmdp.n_states, cmdp.n_actions, dim))
    return FeatureMap(tuple(f"f{i}" for i in range(dim)), values, name="random")


@pytest.fixture(autouse=True)
def _reset_warnings():
    reset_warning_counts()
    yield


@pytest.fixture
def chain():
    return chain_cmdp()


@pytest.fixture
def tiny_cmdp():
    return random_cmdp(0)


@pytest.fixture
def tiny_features(tiny_cmdp):
    return random_features(1, tiny_cmdp)


@pytest.fixture(scope="session")
def reaching_env():
    """Atteinte 7×7 à géométrie fixée: bande en colonne 3, ouverture en lignes 5-6."""
    return build_reaching_env(
        seed=3, grid=7, start=(0, 1), goal=(6, 1), hazard=(3, 1, 5), horizon=15
    )


@pytest.fixture
def chain_demos():
    """Deux démonstrations qui avancent toujours sur la chaîne."""
    traj = Trajectory(np.array([0, 1, 2]), np.array([1, 1, 1]), final_state=3)
    return DemoSet((traj, traj), "chain")
