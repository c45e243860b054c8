"""
Archives JSON versionnées échangées entre les commandes CLI
(démonstrations, modèles appris, trajectoires de transfert).
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

from loguru import logger
from pydantic import ValidationError

from src.baselines import FeatureBoxCost
from src.core.serialization import (
    FORMAT_VERSION,
    demos_from_dict,
    demos_to_dict,
    model_from_dict,
    model_to_dict,
)
from src.core.types import LinearRewardModel
from src.envs import EnvInstance, EnvSpec, build_env
from src.evaluation.experiment import LearnedConstraint
from src.evaluation.metrics import ModelLike
from src.exceptions import ConfigurationError

ARCHIVE_KINDS = ("demos", "model", "rollouts")


def env_recipe(env: EnvInstance) -> Dict[str, Any]:
    """Recette de reconstruction et empreinte d'une instance."""
    return {"spec": env.spec.model_dump(mode="json"), "fingerprint": env.fingerprint()}


def rebuild_env(recipe: Dict[str, Any]) -> EnvInstance:
    """
    Reconstruit une instance depuis sa recette et vérifie son empreinte.

    Raises:
        ConfigurationError: recette invalide ou empreinte différente
    """
    try:
        spec = EnvSpec.model_validate(recipe["spec"])
    except (KeyError, ValidationError) as exc:
        raise ConfigurationError(f"recette d'environnement invalide: {exc}") from exc
    env = build_env(spec)
    expected = recipe.get("fingerprint")
    if expected is not None and env.fingerprint() != expected:
        raise ConfigurationError(f"empreinte de {env.name} différente de celle de l'archive")
    return env


def cost_to_dict(cost: ModelLike) -> Dict[str, Any]:
    if isinstance(cost, FeatureBoxCost):
        return {"type": "feature_box", "box": cost.as_dict()}
    if isinstance(cost, LinearRewardModel):
        return {"type": "linear", "model": model_to_dict(cost)}
    raise ConfigurationError(f"modèle de coût non sérialisable: {type(cost).__name__}")


def cost_from_dict(doc: Dict[str, Any]) -> ModelLike:
    kind = doc.get("type")
    if kind == "feature_box":
        return FeatureBoxCost.from_dict(doc["box"])
    if kind == "linear":
        return model_from_dict(doc["model"])
    raise ConfigurationError(f"type de coût inconnu: {kind}")


def constraint_to_dict(constraint: LearnedConstraint) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "method": constraint.method,
        "cost": cost_to_dict(constraint.cost),
        "residual": cost_to_dict(constraint.residual),
        "xi": float(constraint.xi),
    }
    result = constraint.details.get("result")
    if result is not None:
        doc["decomposition"] = {
            "r_overall": model_to_dict(result.r_overall),
            "r_p": model_to_dict(result.r_p),
            "r_c": model_to_dict(result.r_c),
            "kl_value": float(result.kl_value),
            "bellman_penalty": float(result.bellman_penalty),
            "alpha": float(result.alpha),
            "iterations": int(result.iterations),
            "mode": result.mode,
            "objective": float(result.objective),
            "converged": bool(result.converged),
            "stagnated": bool(result.stagnated),
        }
    known = constraint.details.get("known_r_p")
    if known is not None:
        doc["known_r_p"] = model_to_dict(known)
    return doc


def constraint_from_dict(doc: Dict[str, Any]) -> LearnedConstraint:
    for key in ("method", "cost", "residual", "xi"):
        if key not in doc:
            raise ConfigurationError(f"archive de modèle incomplète, clé manquante: {key}")
    details = {k: doc[k] for k in ("decomposition",) if k in doc}
    return LearnedConstraint(
        method=doc["method"],
        cost=cost_from_dict(doc["cost"]),
        residual=cost_from_dict(doc["residual"]),
        xi=float(doc["xi"]),
        details=details,
    )


def write_archive(path: Union[Path, str], kind: str, payload: Dict[str, Any]) -> Path:
    """
    Écrit une archive JSON (clés triées, en-tête format_version).

    Args:
        path: Fichier de sortie
        kind: Type d'archive (demos, model, rollouts)
        payload: Contenu

    Returns:
        Chemin écrit
    """
    if kind not in ARCHIVE_KINDS:
        raise ConfigurationError(f"type d'archive inconnu: {kind}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"format_version": FORMAT_VERSION, "kind": kind, **payload}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    logger.debug(f"Archive {kind} écrite: {path}")
    return path


def read_archive(path: Union[Path, str], kind: str) -> Dict[str, Any]:
    """
    Lit une archive et vérifie son type et sa version.

    Raises:
        ConfigurationError: fichier absent, JSON invalide, version ou type inattendu
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"archive introuvable: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"archive illisible {path}: {exc}") from exc
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigurationError(
            f"version d'archive {doc.get('format_version')} non supportée "
            f"(attendue: {FORMAT_VERSION})"
        )
    if doc.get("kind") != kind:
        raise ConfigurationError(f"{path}: archive de type '{doc.get('kind')}', attendu '{kind}'")
    return doc


def demos_payload(env: EnvInstance, demos) -> Dict[str, Any]:
    return {"env": env_recipe(env), "demos": demos_to_dict(demos)}


def load_demos(path: Union[Path, str]):
    """(instance, démonstrations) d'une archive de démonstrations."""
    doc = read_archive(path, "demos")
    return rebuild_env(doc["env"]), demos_from_dict(doc["demos"])
