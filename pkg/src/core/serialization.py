"""
Conversion des types de domaine vers/depuis des documents JSON.

Les flottants sont écrits avec leur représentation la plus courte qui
se relit à l'identique (repr Python).
"""

from typing import Any, Dict, List

import numpy as np
import scipy.sparse as sp

from src.core.types import (
    DemoSet,
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    TaskRewardSpace,
    Trajectory,
)
from src.exceptions import ConfigurationError

FORMAT_VERSION = 1


def _floats(values: np.ndarray) -> List[float]:
    return [float(v) for v in np.asarray(values).ravel()]


def _require(doc: Dict[str, Any], *keys: str):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ConfigurationError(f"document incomplet, clés manquantes: {', '.join(missing)}")


def cmdp_to_dict(cmdp: TabularCMDP) -> Dict[str, Any]:
    coo = cmdp.transition.tocoo()
    return {
        "name": cmdp.name,
        "n_states": cmdp.n_states,
        "n_actions": cmdp.n_actions,
        "discount": float(cmdp.discount),
        "horizon": int(cmdp.horizon),
        "start_dist": _floats(cmdp.start_dist),
        "terminal_states": sorted(cmdp.terminal_states),
        "transition": {
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "probs": _floats(coo.data),
        },
    }


def cmdp_from_dict(doc: Dict[str, Any]) -> TabularCMDP:
    _require(doc, "n_states", "n_actions", "discount", "horizon", "start_dist", "transition")
    n_states, n_actions = int(doc["n_states"]), int(doc["n_actions"])
    triplets = doc["transition"]
    matrix = sp.csr_matrix(
        (triplets["probs"], (triplets["rows"], triplets["cols"])),
        shape=(n_states * n_actions, n_states),
    )
    return TabularCMDP(
        transition=matrix,
        n_states=n_states,
        n_actions=n_actions,
        start_dist=np.asarray(doc["start_dist"], dtype=np.float64),
        discount=float(doc["discount"]),
        horizon=int(doc["horizon"]),
        terminal_states=frozenset(doc.get("terminal_states", [])),
        name=doc.get("name", "cmdp"),
    )


def feature_map_to_dict(features: FeatureMap) -> Dict[str, Any]:
    return {
        "name": features.name,
        "names": list(features.names),
        "shape": list(features.values.shape),
        "values": _floats(features.values),
    }


def feature_map_from_dict(doc: Dict[str, Any]) -> FeatureMap:
    _require(doc, "names", "shape", "values")
    values = np.asarray(doc["values"], dtype=np.float64).reshape(doc["shape"])
    return FeatureMap(tuple(doc["names"]), values, name=doc.get("name", "features"))


def model_to_dict(model: LinearRewardModel) -> Dict[str, Any]:
    return {
        "kind": model.kind.value,
        "feature_names": list(model.feature_names),
        "weights": _floats(model.weights),
        "clamp_nonnegative": model.clamp_nonnegative,
    }


def model_from_dict(doc: Dict[str, Any]) -> LinearRewardModel:
    _require(doc, "feature_names", "weights")
    try:
        kind = RewardKind(doc.get("kind", RewardKind.OVERALL.value))
    except ValueError as exc:
        raise ConfigurationError(f"type de modèle inconnu: {doc.get('kind')}") from exc
    return LinearRewardModel(
        np.asarray(doc["weights"], dtype=np.float64),
        tuple(doc["feature_names"]),
        kind,
        bool(doc.get("clamp_nonnegative", False)),
    )


def task_space_to_dict(space: TaskRewardSpace) -> Dict[str, Any]:
    return {
        "feature_names": list(space.feature_names),
        "basis": list(space.basis),
        "sign_constrained": list(space.sign_constrained),
        "weight_bound": float(space.weight_bound),
    }


def task_space_from_dict(doc: Dict[str, Any]) -> TaskRewardSpace:
    _require(doc, "feature_names", "basis")
    return TaskRewardSpace(
        tuple(doc["feature_names"]),
        tuple(doc["basis"]),
        tuple(doc.get("sign_constrained", ())),
        float(doc.get("weight_bound", 1e3)),
    )


def trajectory_to_dict(traj: Trajectory) -> Dict[str, Any]:
    return {
        "states": traj.states.tolist(),
        "actions": traj.actions.tolist(),
        "final_state": traj.final_state,
    }


def trajectory_from_dict(doc: Dict[str, Any]) -> Trajectory:
    _require(doc, "states", "actions")
    return Trajectory(
        np.asarray(doc["states"], dtype=np.int64),
        np.asarray(doc["actions"], dtype=np.int64),
        doc.get("final_state"),
    )


def demos_to_dict(demos: DemoSet) -> Dict[str, Any]:
    return {
        "env_id": demos.env_id,
        "trajectories": [trajectory_to_dict(t) for t in demos],
    }


def demos_from_dict(doc: Dict[str, Any]) -> DemoSet:
    _require(doc, "env_id", "trajectories")
    return DemoSet(tuple(trajectory_from_dict(t) for t in doc["trajectories"]), doc["env_id"])
