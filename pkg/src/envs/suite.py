"""
Registre des familles d'environnements et génération de suites de test.
"""

import inspect
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from loguru import logger

from src.envs.common import EnvInstance, EnvSpec
from src.envs.reaching import build_reaching_env, zones
from src.envs.tray import build_tray_env
from src.envs.wall import CURVE_RANGE, build_wall_env
from src.envs.wiping import MAX_AMPLITUDE, build_wiping_env
from src.exceptions import ArgumentError, ConfigurationError, InfeasibleError
from src.utils.seeding import derive_seed, substream

BUILDERS: Dict[str, Callable[..., EnvInstance]] = {
    "tray": build_tray_env,
    "wall": build_wall_env,
    "wiping": build_wiping_env,
    "reaching": build_reaching_env,
}

AVAILABLE_FAMILIES = tuple(BUILDERS)
SUITE_MODES = ("demo_like", "random")
MAX_RESAMPLES = 50

# Fournis par le registre lui-même
_RESERVED_PARAMS = ("seed", "grid")


def _builder(family: str) -> Callable[..., EnvInstance]:
    if family not in BUILDERS:
        raise ArgumentError(f"famille inconnue: {family}. Disponibles: {list(BUILDERS)}")
    return BUILDERS[family]


def builder_parameters(family: str) -> List[str]:
    """Paramètres nommés acceptés par le constructeur d'une famille (hors seed et grid)."""
    signature = inspect.signature(_builder(family))
    return [name for name in signature.parameters if name not in _RESERVED_PARAMS]


def unknown_builder_params(family: str, params: Mapping[str, Any]) -> Tuple[List[str], List[str]]:
    """
    Clés de params que le constructeur de la famille ne connaît pas.

    Returns:
        (clés inconnues triées, paramètres acceptés)
    """
    accepted = builder_parameters(family)
    return sorted(set(params) - set(accepted)), accepted


def check_builder_params(family: str, params: Mapping[str, Any], context: str = "params"):
    """
    Raises:
        ConfigurationError: clé absente de la signature du constructeur
    """
    unknown, accepted = unknown_builder_params(family, params)
    if unknown:
        raise ConfigurationError(
            f"{context}: paramètres inconnus pour {family}: {unknown}. Acceptés: {accepted}"
        )


def build_env(spec: EnvSpec) -> EnvInstance:
    """Reconstruit une instance depuis sa recette."""
    builder = _builder(spec.family)
    params = dict(spec.params)
    check_builder_params(spec.family, params, f"recette {spec.family}-{spec.seed}")
    if "curve_params" in params:
        params["curve_params"] = tuple(params["curve_params"])
    return builder(seed=spec.seed, grid=spec.grid, **params)


def build_training_env(family: str, seed: int, grid=None, **params: Any) -> EnvInstance:
    """
    Instance d'entraînement d'une famille (configuration par défaut).

    Pour les familles à courbe aléatoire, l'instance est retirée jusqu'à
    obtenir une instance faisable.

    Raises:
        ConfigurationError: paramètre inconnu du constructeur
        InfeasibleError: aucune instance faisable après MAX_RESAMPLES tirages
    """
    builder = _builder(family)
    check_builder_params(family, params, "env.params")
    last_error: Optional[InfeasibleError] = None
    for attempt in range(MAX_RESAMPLES):
        instance_seed = seed if attempt == 0 else derive_seed(seed, "training", family, attempt)
        try:
            return builder(seed=instance_seed, grid=grid, **params)
        except InfeasibleError as exc:
            last_error = exc
            logger.debug(f"Instance {family}-{instance_seed} infaisable, nouveau tirage: {exc}")
    raise InfeasibleError(
        f"aucune instance {family} faisable après {MAX_RESAMPLES} tirages: {last_error}"
    )


def _perturb(value: int, rng, low: int, high: int) -> int:
    return int(min(high, max(low, value + int(rng.integers(-1, 2)))))


def _suite_params(family: str, mode: str, rng, grid, training: EnvInstance) -> Dict[str, Any]:
    """Paramètres d'une instance de suite (départ/but et géométrie)."""
    if family == "tray":
        positions = training.metadata["positions"]
        if mode == "demo_like":
            configs = training.metadata["bin_configurations"]
            start, goal = configs[int(rng.integers(len(configs)))]
            start = _perturb(start, rng, 0, positions - 1)
            goal = _perturb(goal, rng, 0, positions - 1)
        else:
            start, goal = (int(v) for v in rng.choice(positions, size=2, replace=False))
        return {"configurations": [[start, goal]]}

    n = training.metadata["grid"]
    if family in ("wall", "wiping"):
        if mode == "demo_like":
            start_col, goal_col = training.metadata["columns"]
            start_col = _perturb(start_col, rng, 0, n - 1)
            goal_col = _perturb(goal_col, rng, 0, n - 1)
        else:
            start_col, goal_col = (int(v) for v in rng.choice(n, size=2, replace=False))
        params: Dict[str, Any] = {"start_col": start_col, "goal_col": goal_col}
        if family == "wall":
            params["curve_params"] = tuple(float(v) for v in rng.uniform(*CURVE_RANGE, size=2))
        else:
            params["amplitude"] = float(rng.uniform(-MAX_AMPLITUDE, MAX_AMPLITUDE))
        return params

    # reaching
    (start_lo, start_hi), _, (goal_lo, goal_hi) = zones(n)
    if mode == "demo_like":
        sx, sy = training.spec.params["start"]
        gx, gy = training.spec.params["goal"]
        return {
            "start": [_perturb(sx, rng, start_lo, start_hi), _perturb(sy, rng, 0, n - 1)],
            "goal": [_perturb(gx, rng, goal_lo, goal_hi), _perturb(gy, rng, 0, n - 1)],
        }
    return {}


def sample_eval_suite(
    family: str,
    count: int,
    seed: int,
    mode: str = "random",
    grid=None,
    overrides: Optional[Dict[str, Any]] = None,
    training_params: Optional[Dict[str, Any]] = None,
) -> List[EnvInstance]:
    """
    Génère une suite déterministe d'instances de test.

    Args:
        family: Famille d'environnements
        count: Nombre d'instances (≥ 1)
        seed: Graine de la suite (et de l'instance d'entraînement de référence)
        mode: "demo_like" (départ/but à ±1 bin d'une configuration
            d'entraînement) ou "random" (tirage uniforme)
        grid: Résolution (défaut de la famille)
        overrides: Paramètres imposés à toutes les instances
            (ex: {"tilt_sensitivity": 2} pour un objet nouveau)
        training_params: Paramètres de l'instance d'entraînement, pour que
            les perturbations "demo_like" partent de la géométrie réellement apprise

    Returns:
        Liste d'EnvInstance

    Raises:
        ArgumentError: famille ou mode inconnu, count < 1
        ConfigurationError: clé de overrides ou training_params inconnue du constructeur
    """
    builder = _builder(family)
    if mode not in SUITE_MODES:
        raise ArgumentError(f"mode inconnu: {mode}. Disponibles: {list(SUITE_MODES)}")
    if count < 1:
        raise ArgumentError(f"count doit être ≥ 1 (reçu {count})")
    overrides = dict(overrides or {})
    check_builder_params(family, overrides, "env.transfer_params")

    training = build_training_env(family, seed, grid=grid, **(training_params or {}))
    suite = []
    for i in range(count):
        for attempt in range(MAX_RESAMPLES):
            instance_seed = derive_seed(seed, "suite", family, mode, i, attempt)
            rng = substream(instance_seed, "suite-params")
            params = _suite_params(family, mode, rng, grid, training)
            params.update(overrides)
            try:
                suite.append(builder(seed=instance_seed, grid=grid, **params))
                break
            except InfeasibleError as exc:
                logger.debug(f"Instance {family}-{instance_seed} rejetée: {exc}")
        else:
            raise InfeasibleError(
                f"instance {i} de la suite {family}/{mode} "
                f"infaisable après {MAX_RESAMPLES} tirages"
            )

    logger.info(f"Suite {family}/{mode}: {len(suite)} instances (graine {seed})")
    return suite
