"""
Schéma des documents de configuration TOML (expériences et commandes CLI).

Les clés inconnues sont des erreurs.
"""

import hashlib
import json
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from config import settings
from src.crl.lagrangian import CrlConfig
from src.envs.common import EnvSpec
from src.envs.suite import AVAILABLE_FAMILIES, SUITE_MODES, unknown_builder_params
from src.exceptions import ConfigurationError
from src.learning.config import TclConfig

AVAILABLE_METHODS = ("tcl", "fc", "icrl")

GridValue = Optional[Union[int, Tuple[int, int]]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_family(value: str) -> str:
    if value not in AVAILABLE_FAMILIES:
        raise ValueError(f"famille inconnue: {value}. Disponibles: {list(AVAILABLE_FAMILIES)}")
    return value


def _check_method(value: str) -> str:
    if value not in AVAILABLE_METHODS:
        raise ValueError(f"méthode inconnue: {value}. Disponibles: {list(AVAILABLE_METHODS)}")
    return value


class ExperimentSection(_Section):
    name: str = "experiment"
    seeds: List[int] = Field(default_factory=lambda: [0], min_length=1)
    families: List[str] = Field(default_factory=lambda: ["reaching"], min_length=1)
    jobs: Optional[int] = Field(default=None, gt=0)
    output_dir: Optional[Path] = None
    record_wall_clock: bool = False

    @field_validator("families")
    @classmethod
    def check_families(cls, values: List[str]) -> List[str]:
        return [_check_family(v) for v in values]


class EnvSection(_Section):
    """Environnement d'entraînement; transfer_params s'applique aux suites de test."""

    family: str = "reaching"
    seed: int = 0
    grid: GridValue = None
    horizon: Optional[int] = Field(default=None, gt=0)
    discount: Optional[float] = Field(default=None, ge=0.0, lt=1.0)
    params: Dict[str, Any] = Field(default_factory=dict)
    transfer_params: Dict[str, Any] = Field(default_factory=dict)

    check_family = field_validator("family")(_check_family)

    def builder_params(self) -> Dict[str, Any]:
        params = dict(self.params)
        if self.horizon is not None:
            params["horizon"] = self.horizon
        if self.discount is not None:
            params["discount"] = self.discount
        return params

    def suite_overrides(self) -> Dict[str, Any]:
        overrides = dict(self.transfer_params)
        if self.horizon is not None:
            overrides.setdefault("horizon", self.horizon)
        if self.discount is not None:
            overrides.setdefault("discount", self.discount)
        return overrides

    def to_spec(self, family: Optional[str] = None, seed: Optional[int] = None) -> EnvSpec:
        return EnvSpec(
            family=family or self.family,
            seed=self.seed if seed is None else seed,
            grid=self.grid,
            params=self.builder_params(),
        )


class DemosSection(_Section):
    n: int = Field(default_factory=lambda: settings.demo_count, gt=0)
    horizon: Optional[int] = Field(default=None, gt=0)
    reward_scale: float = Field(default_factory=lambda: settings.expert_reward_scale, gt=0.0)


class LearnSection(_Section):
    method: str = "tcl"
    methods: List[str] = Field(default_factory=lambda: list(AVAILABLE_METHODS), min_length=1)
    rd_mode: Literal["exact", "approx", "approximate"] = "exact"
    alpha: float = Field(default_factory=lambda: settings.rd_alpha, ge=0.0)
    irl_step_size: float = Field(default_factory=lambda: settings.irl_step_size, gt=0.0)
    rd_step_size: float = Field(default_factory=lambda: settings.rd_step_size, gt=0.0)
    outer_iterations: int = Field(default_factory=lambda: settings.outer_iterations, gt=0)
    decomposition_interval: int = Field(
        default_factory=lambda: settings.decomposition_interval, gt=0
    )
    step_schedule: Literal["backtracking", "inverse_sqrt"] = "backtracking"
    icrl_misspecification: float = Field(default=1.0, gt=0.0)
    icrl_free_features: Optional[List[str]] = None

    check_method = field_validator("method")(_check_method)

    @field_validator("methods")
    @classmethod
    def check_methods(cls, values: List[str]) -> List[str]:
        return [_check_method(v) for v in values]

    def tcl_config(self) -> TclConfig:
        return TclConfig(
            irl_step_size=self.irl_step_size,
            rd_step_size=self.rd_step_size,
            outer_iterations=self.outer_iterations,
            decomposition_interval=self.decomposition_interval,
            rd_mode=self.rd_mode,
            alpha=self.alpha,
            step_schedule=self.step_schedule,
        )


class TransferSection(_Section):
    """Récompense de tâche de l'utilisateur (défaut: partie tâche de r_E)."""

    task_reward: Dict[str, float] = Field(default_factory=dict)
    xi_override: Optional[float] = Field(default=None, ge=0.0)
    reward_scale: float = Field(default_factory=lambda: settings.expert_reward_scale, gt=0.0)
    step_size: float = Field(default_factory=lambda: settings.crl_step_size, gt=0.0)
    max_iterations: int = Field(default_factory=lambda: settings.crl_max_iterations, gt=0)

    def crl_config(self) -> CrlConfig:
        return CrlConfig(step_size=self.step_size, max_iterations=self.max_iterations)


class EvalSection(_Section):
    modes: List[str] = Field(default_factory=lambda: list(SUITE_MODES), min_length=1)
    count: int = Field(default_factory=lambda: settings.eval_count, gt=0)
    rollouts: int = Field(default_factory=lambda: settings.eval_rollouts, gt=0)
    correlation_samples: int = Field(default_factory=lambda: settings.correlation_samples, ge=2)

    @field_validator("modes")
    @classmethod
    def check_modes(cls, values: List[str]) -> List[str]:
        for value in values:
            if value not in SUITE_MODES:
                raise ValueError(f"mode inconnu: {value}. Disponibles: {list(SUITE_MODES)}")
        return values


class ExperimentConfig(_Section):
    """Document de configuration complet."""

    experiment: ExperimentSection = Field(default_factory=ExperimentSection)
    env: EnvSection = Field(default_factory=EnvSection)
    demos: DemosSection = Field(default_factory=DemosSection)
    learn: LearnSection = Field(default_factory=LearnSection)
    transfer: TransferSection = Field(default_factory=TransferSection)
    eval: EvalSection = Field(default_factory=EvalSection)

    @model_validator(mode="after")
    def check_builder_params(self) -> "ExperimentConfig":
        """
        Les clés de env.params et env.transfer_params doivent exister pour
        chaque famille donnée (env.family, experiment.families); env.family
        par défaut n'est vérifiée que si experiment.families est absent.
        """
        explicit = "families" in self.experiment.model_fields_set
        families = list(self.experiment.families) if explicit else []
        if "family" in self.env.model_fields_set or not explicit:
            families.insert(0, self.env.family)
        families = list(dict.fromkeys(families))
        for section in ("params", "transfer_params"):
            keys = getattr(self.env, section)
            for family in families:
                unknown, accepted = unknown_builder_params(family, keys)
                if unknown:
                    raise ValueError(
                        f"env.{section}: paramètres inconnus pour {family}: {unknown}. "
                        f"Acceptés: {accepted}"
                    )
        return self

    def config_hash(self) -> str:
        """SHA-256 du document canonique (JSON trié)."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def parse_config(doc: Dict[str, Any]) -> ExperimentConfig:
    """
    Valide un document déjà chargé.

    Raises:
        ConfigurationError: clé inconnue ou valeur invalide
    """
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigurationError(f"configuration invalide:\n{exc}") from exc


def load_config(path: Optional[Path] = None) -> ExperimentConfig:
    """
    Charge un document TOML (document vide si path est None).

    Args:
        path: Fichier TOML

    Returns:
        ExperimentConfig validée

    Raises:
        ConfigurationError: fichier illisible, TOML invalide ou schéma non respecté
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    try:
        with path.open("rb") as f:
            doc = tomllib.load(f)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"fichier de configuration introuvable: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"TOML invalide dans {path}: {exc}") from exc
    return parse_config(doc)
