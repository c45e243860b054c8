"""
Décomposition d'une récompense r en récompense de tâche r_p ∈ R_p et
récompense résiduelle r_c = r − r_p.

Mode exact: min_{r_p ∈ R_p} Σ_s μ̂(s) KL(π_p(·|s) || π(·|s)), π_p étant la
politique entropique optimale pour r_p (descente de gradient projetée).

Mode approché: minimisation jointe sur (Q_p, r_p) de
Σ_s μ̂(s) KL(softmax Q_p || π) + α Σ_{s,a} μ̂(s) π(a|s) δ(s, a)²,
avec δ = Q_p − r_p − γ E_{s'}[V_p(s')] et V_p(s) = E_{a∼π}[Q_p(s, a) − log π(a|s)].

Les deux modes ajoutent un terme −ε ||w_p||₁ qui départage les optimums au
profit de la récompense de tâche la plus grande.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.linalg import null_space
from scipy.optimize import minimize
from scipy.special import logsumexp

from src.core.types import (
    FeatureMap,
    LinearRewardModel,
    RewardKind,
    TabularCMDP,
    TaskRewardSpace,
    cost_from_residual,
)
from src.exceptions import (
    ConfigurationError,
    FeatureMismatchError,
    InvariantViolationError,
    NumericalError,
)
from src.learning.config import TclConfig
from src.observability.diagnostics import count_warning
from src.solver import BoltzmannPolicy, SoftSolution, occupancy, soft_value_iteration, state_kl
from src.solver.evaluation import solve_policy_values
from src.solver.soft_value_iteration import continuation_mask

ADDITIVITY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """Paire (r_p, r_c) retrouvée et diagnostics de l'optimisation."""

    r_overall: LinearRewardModel
    r_p: LinearRewardModel
    r_c: LinearRewardModel
    kl_value: float
    bellman_penalty: float
    alpha: float
    iterations: int
    mode: str = "exact"
    objective: float = 0.0
    converged: bool = True
    stagnated: bool = False
    task_policy: Optional[BoltzmannPolicy] = None
    policy: Optional[BoltzmannPolicy] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        names = self.r_overall.feature_names
        if self.r_p.feature_names != names or self.r_c.feature_names != names:
            raise ConfigurationError("r, r_p et r_c doivent partager la même carte de features")
        gap = np.max(np.abs(self.r_p.weights + self.r_c.weights - self.r_overall.weights))
        if gap > ADDITIVITY_TOLERANCE * max(1.0, float(np.max(np.abs(self.r_overall.weights)))):
            raise InvariantViolationError(f"additivité r = r_p + r_c violée (écart {gap:.3e})")

    def cost_model(self) -> LinearRewardModel:
        """Coût transférable c = −r_c (tronqué à 0)."""
        return cost_from_residual(self.r_c)


def align_to_space(r: LinearRewardModel, space: TaskRewardSpace) -> LinearRewardModel:
    """Réordonne les poids de r sur les features de l'espace de tâche."""
    if r.feature_names == space.feature_names:
        return r
    missing = set(space.feature_names) ^ set(r.feature_names)
    if missing:
        raise FeatureMismatchError(missing, context="décomposition")
    order = [r.feature_names.index(n) for n in space.feature_names]
    return LinearRewardModel(r.weights[order], space.feature_names, r.kind, r.clamp_nonnegative)


def split_reward(
    r: LinearRewardModel,
    task_weights: np.ndarray,
) -> Tuple[LinearRewardModel, LinearRewardModel, LinearRewardModel]:
    """(r, r_p, r_c) avec r_c = r − r_p sur les poids."""
    overall = LinearRewardModel(r.weights, r.feature_names, RewardKind.OVERALL)
    r_p = LinearRewardModel(task_weights, r.feature_names, RewardKind.TASK)
    r_c = LinearRewardModel(r.weights - task_weights, r.feature_names, RewardKind.RESIDUAL)
    return overall, r_p, r_c


def visitation_weights(cmdp: TabularCMDP, policy: BoltzmannPolicy) -> np.ndarray:
    """μ̂: visites actualisées de π, normalisées."""
    return occupancy(cmdp, policy, discounted=True).normalized_states()


@dataclass(frozen=True, eq=False)
class CenteredReward:
    """Récompense ramenée à une moyenne nulle sur le support des visites de sa politique."""

    reward: LinearRewardModel
    features: FeatureMap
    offset: float
    constant_direction: bool


def center_reward(
    r: LinearRewardModel,
    features: FeatureMap,
    cmdp: TabularCMDP,
    policy: BoltzmannPolicy,
    rcond: float = 1e-10,
) -> CenteredReward:
    """
    Fixe la jauge de r avant décomposition.

    Les features sont centrées sous ρ(s, a) = μ̂(s) π(a|s): toute récompense
    linéaire évaluée sur la carte centrée est de moyenne nulle sur le support.
    Si une combinaison de features est constante sur ce support, la
    composante de r le long de cette direction est retirée des poids, de
    sorte que r et r + constante donnent la même récompense centrée.

    Args:
        r: Récompense globale
        features: Carte de features brute
        cmdp: CMDP tabulaire
        policy: Politique entropique optimale pour r
        rcond: Seuil relatif des valeurs singulières nulles

    Returns:
        CenteredReward (offset = moyenne de r retirée)
    """
    rho = visitation_weights(cmdp, policy)[:, None] * policy.probs
    mean = np.einsum("sa,sad->d", rho, features.values)
    centered = FeatureMap(features.names, features.values - mean, name=f"{features.name}-centered")

    idx = features.resolve(r.feature_names)
    offset = float(mean[idx] @ r.weights)
    weighted = (np.sqrt(rho)[:, :, None] * centered.values[:, :, idx]).reshape(-1, len(idx))
    directions = null_space(weighted, rcond=rcond)
    along_mean = directions.T @ mean[idx]
    norm = float(along_mean @ along_mean)
    constant = norm > rcond
    weights = r.weights
    if constant:
        # v ∈ noyau de Φ̃ avec mean·v = 1: Φ v vaut 1 sur le support
        weights = weights - offset * (directions @ along_mean) / norm
    return CenteredReward(
        reward=LinearRewardModel(weights, r.feature_names, r.kind),
        features=centered,
        offset=offset,
        constant_direction=constant,
    )


def energy_kl(q_p: np.ndarray, q: np.ndarray, state_weights: np.ndarray) -> float:
    """Σ_s μ̂(s) KL(exp Q_p/Z_p || exp Q/Z)."""
    log_p = q_p - logsumexp(q_p, axis=1, keepdims=True)
    log_q = q - logsumexp(q, axis=1, keepdims=True)
    per_state = np.sum(np.exp(log_p) * (log_p - log_q), axis=1)
    return float(state_weights @ per_state)


class ExactDecompositionObjective:
    """
    J(w_p) = Σ_s μ̂(s) KL(π_p(·|s) || π(·|s)) − ε ||w_p||₁ et son gradient
    analytique via les features successeurs Ψ = (I − γ P Π_p)⁻¹ φ.
    """

    def __init__(
        self,
        cmdp: TabularCMDP,
        features: FeatureMap,
        policy: BoltzmannPolicy,
        space: TaskRewardSpace,
        state_weights: np.ndarray,
        epsilon: float = 0.0,
        tolerance: Optional[float] = None,
    ):
        self.cmdp = cmdp
        self.policy = policy
        self.space = space
        self.state_weights = np.asarray(state_weights, dtype=np.float64)
        self.epsilon = epsilon
        self.tolerance = tolerance
        self.phi = features.values[:, :, features.resolve(space.feature_names)]
        self.mask = continuation_mask(cmdp)
        self._q: Optional[np.ndarray] = None

    def solve(self, weights: np.ndarray) -> SoftSolution:
        solution = soft_value_iteration(
            self.cmdp, self.phi @ weights, tolerance=self.tolerance, init_q=self._q
        )
        self._q = solution.q.values
        return solution

    def kl(self, policy_p: BoltzmannPolicy) -> float:
        return float(self.state_weights @ state_kl(policy_p, self.policy))

    def value(self, weights: np.ndarray) -> Tuple[float, SoftSolution]:
        solution = self.solve(weights)
        value = self.kl(solution.policy) - self.epsilon * np.sum(np.abs(weights))
        if not np.isfinite(value):
            raise NumericalError(
                "objectif de décomposition non fini", {"weights": weights.tolist()}
            )
        return value, solution

    def gradient(self, weights: np.ndarray, solution: SoftSolution) -> np.ndarray:
        policy_p = solution.policy
        log_ratio = policy_p.log_probs - self.policy.log_probs
        centered = log_ratio - np.sum(policy_p.probs * log_ratio, axis=1, keepdims=True)
        coefficients = self.state_weights[:, None] * policy_p.probs * centered

        rhs = np.einsum("sa,sad->sd", policy_p.probs, self.phi)
        psi_v = solve_policy_values(self.cmdp, policy_p, rhs)
        n_states, n_actions, dim = self.phi.shape
        successor = (self.cmdp.transition @ psi_v).reshape(n_states, n_actions, dim)
        psi = self.phi + self.cmdp.discount * self.mask[:, :, None] * successor

        grad = np.einsum("sa,sad->d", coefficients, psi) - self.epsilon * np.sign(weights)
        if not np.all(np.isfinite(grad)):
            raise NumericalError(
                "gradient de décomposition non fini", {"weights": weights.tolist()}
            )
        return grad

    def value_and_grad(self, weights: np.ndarray) -> Tuple[float, np.ndarray]:
        value, solution = self.value(weights)
        return value, self.gradient(weights, solution)


class ApproximateDecompositionObjective:
    """Objectif pénalisé sur x = (Q_p aplati, poids de base de r_p)."""

    def __init__(
        self,
        cmdp: TabularCMDP,
        features: FeatureMap,
        policy: BoltzmannPolicy,
        space: TaskRewardSpace,
        state_weights: np.ndarray,
        alpha: float,
        epsilon: float = 0.0,
    ):
        self.cmdp = cmdp
        self.policy = policy
        self.space = space
        self.alpha = alpha
        self.epsilon = epsilon
        self.state_weights = np.asarray(state_weights, dtype=np.float64)
        phi = features.values[:, :, features.resolve(space.feature_names)]
        self.phi_basis = phi[:, :, space.basis_indices]
        self.mask = continuation_mask(cmdp)
        self.rho = self.state_weights[:, None] * policy.probs
        self.shape = (cmdp.n_states, cmdp.n_actions)

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        size = self.shape[0] * self.shape[1]
        return x[:size].reshape(self.shape), x[size:]

    def residual(self, q_p: np.ndarray, basis_weights: np.ndarray) -> np.ndarray:
        """δ = Q_p − r_p − γ E[V_p(s')]."""
        v_p = np.sum(self.policy.probs * (q_p - self.policy.log_probs), axis=1)
        next_value = self.cmdp.discount * self.mask * self.cmdp.expected_next(v_p)
        return q_p - self.phi_basis @ basis_weights - next_value

    def terms(self, x: np.ndarray) -> Dict[str, float]:
        q_p, basis_weights = self.split(x)
        kl = energy_kl(q_p, self.policy.log_probs, self.state_weights)
        delta = self.residual(q_p, basis_weights)
        penalty = float(np.sum(self.rho * delta ** 2))
        return {"kl": kl, "penalty": penalty}

    def value_and_grad(self, x: np.ndarray) -> Tuple[float, np.ndarray]:
        q_p, basis_weights = self.split(x)
        log_p = q_p - logsumexp(q_p, axis=1, keepdims=True)
        probs_p = np.exp(log_p)
        log_ratio = log_p - self.policy.log_probs
        kl_per_state = np.sum(probs_p * log_ratio, axis=1)
        kl = float(self.state_weights @ kl_per_state)

        delta = self.residual(q_p, basis_weights)
        weighted = self.rho * delta
        penalty = float(np.sum(weighted * delta))

        value = kl + self.alpha * penalty - self.epsilon * np.sum(np.abs(basis_weights))

        grad_q = self.state_weights[:, None] * probs_p * (log_ratio - kl_per_state[:, None])
        back = self.cmdp.transition_t @ (self.mask * weighted).ravel()
        discounted_back = self.cmdp.discount * self.policy.probs * back[:, None]
        grad_q += 2.0 * self.alpha * (weighted - discounted_back)
        grad_w = -2.0 * self.alpha * np.einsum("sab,sa->b", self.phi_basis, weighted)
        grad_w -= self.epsilon * np.sign(basis_weights)

        grad = np.concatenate([grad_q.ravel(), grad_w])
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            raise NumericalError(
                "objectif approché non fini", {"basis_weights": basis_weights.tolist()}
            )
        return value, grad


def decompose_exact(
    r: LinearRewardModel,
    policy: BoltzmannPolicy,
    space: TaskRewardSpace,
    cmdp: TabularCMDP,
    features: FeatureMap,
    config: Optional[TclConfig] = None,
    state_weights: Optional[np.ndarray] = None,
    init_weights: Optional[np.ndarray] = None,
) -> DecompositionResult:
    """
    Décomposition exacte par descente de gradient projetée (recherche
    linéaire d'Armijo).

    Args:
        r: Récompense globale
        policy: Politique entropique optimale pour r
        space: Espace des récompenses de tâche
        cmdp: CMDP tabulaire
        features: Carte de features
        config: Configuration (pas, itérations, ε, patience)
        state_weights: μ̂ (défaut: visites actualisées de π)
        init_weights: Point de départ (défaut: projection de r sur R_p)

    Returns:
        DecompositionResult (meilleur point rencontré)
    """
    config = config or TclConfig()
    r = align_to_space(r, space)
    if state_weights is None:
        state_weights = visitation_weights(cmdp, policy)
    objective = ExactDecompositionObjective(
        cmdp, features, policy, space, state_weights, config.tie_break_epsilon
    )

    weights = space.project(r.weights if init_weights is None else init_weights)
    value, solution = objective.value(weights)
    grad = objective.gradient(weights, solution)
    best_value, best_weights, best_solution = value, weights, solution

    eta = config.rd_step_size
    since_improvement = 0
    converged = stagnated = False
    iteration = 0
    for iteration in range(1, config.rd_max_iterations + 1):
        accepted = False
        for _ in range(config.max_backtracks):
            candidate = space.project(weights - eta * grad)
            step = candidate - weights
            if not np.any(step):
                break
            candidate_value, candidate_solution = objective.value(candidate)
            # condition de décroissance suffisante du gradient projeté
            if candidate_value <= value + grad @ step + (step @ step) / (2.0 * eta):
                accepted = True
                break
            eta *= 0.5

        if not accepted:
            converged = True
            break

        change = value - candidate_value
        weights, value, solution = candidate, candidate_value, candidate_solution
        grad = objective.gradient(weights, solution)
        eta *= 2.0

        if value < best_value - 1e-15:
            best_value, best_weights, best_solution = value, weights, solution
            since_improvement = 0
        else:
            since_improvement += 1
        logger.debug(f"RD exacte it {iteration}: J={value:.6e} η={eta:.3e}")

        if since_improvement >= config.stagnation_patience:
            stagnated = True
            count_warning("rd_stagnation")
            logger.warning(
                f"Décomposition exacte: pas d'amélioration depuis {since_improvement} itérations"
            )
            break
        if abs(change) <= config.rd_tolerance:
            converged = True
            break

    overall, r_p, r_c = split_reward(r, best_weights)
    kl = objective.kl(best_solution.policy)
    return DecompositionResult(
        r_overall=overall,
        r_p=r_p,
        r_c=r_c,
        kl_value=kl,
        bellman_penalty=0.0,
        alpha=0.0,
        iterations=iteration,
        mode="exact",
        objective=best_value,
        converged=converged,
        stagnated=stagnated,
        task_policy=best_solution.policy,
        policy=policy,
    )


def decompose_approx(
    r: LinearRewardModel,
    policy: BoltzmannPolicy,
    space: TaskRewardSpace,
    cmdp: TabularCMDP,
    features: FeatureMap,
    alpha: Optional[float] = None,
    config: Optional[TclConfig] = None,
    q: Optional[np.ndarray] = None,
    state_weights: Optional[np.ndarray] = None,
) -> DecompositionResult:
    """
    Décomposition approchée: minimisation jointe (Q_p, r_p) par L-BFGS-B.

    Args:
        r: Récompense globale
        policy: Politique entropique optimale pour r
        space: Espace des récompenses de tâche
        cmdp: CMDP tabulaire
        features: Carte de features
        alpha: Poids de la pénalité de Bellman (défaut: config.alpha)
        config: Configuration
        q: Table Q de r (défaut: recalculée)
        state_weights: μ̂ (défaut: visites actualisées de π)

    Returns:
        DecompositionResult
    """
    config = config or TclConfig()
    alpha = config.alpha if alpha is None else alpha
    if alpha < 0.0:
        raise ConfigurationError(f"alpha doit être ≥ 0 (reçu {alpha})")
    r = align_to_space(r, space)
    if state_weights is None:
        state_weights = visitation_weights(cmdp, policy)
    if q is None:
        q = soft_value_iteration(cmdp, r, features).q.values

    objective = ApproximateDecompositionObjective(
        cmdp, features, policy, space, state_weights, alpha, config.tie_break_epsilon
    )
    basis_start = space.project(r.weights)[space.basis_indices]
    x0 = np.concatenate([np.asarray(q, dtype=np.float64).ravel(), basis_start])
    bounds = [(None, None)] * (cmdp.n_states * cmdp.n_actions) + list(
        zip(space.lower_bounds.tolist(), space.upper_bounds.tolist())
    )

    history = {"best": np.inf, "since": 0, "last": np.inf, "stagnated": False}

    def fun(x):
        value, grad = objective.value_and_grad(x)
        history["last"] = value
        return value, grad

    def callback(_):
        if history["last"] < history["best"] - 1e-15:
            history["best"], history["since"] = history["last"], 0
        else:
            history["since"] += 1
            if history["since"] == config.stagnation_patience:
                history["stagnated"] = True
                count_warning("rd_stagnation")
                logger.warning("Décomposition approchée: stagnation de l'objectif")

    result = minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=bounds,
        callback=callback,
        options={
            "maxiter": config.rd_max_iterations,
            "ftol": config.rd_tolerance * 1e-3,
            "gtol": 1e-10,
        },
    )

    q_p, basis_weights = objective.split(result.x)
    task_weights = space.project(space.embed(basis_weights))
    terms = objective.terms(np.concatenate([q_p.ravel(), task_weights[space.basis_indices]]))
    overall, r_p, r_c = split_reward(r, task_weights)
    if not result.success:
        logger.debug(f"L-BFGS-B: {result.message}")
    return DecompositionResult(
        r_overall=overall,
        r_p=r_p,
        r_c=r_c,
        kl_value=terms["kl"],
        bellman_penalty=terms["penalty"],
        alpha=alpha,
        iterations=int(result.nit),
        mode="approximate",
        objective=float(result.fun),
        converged=bool(result.success),
        stagnated=history["stagnated"],
        task_policy=BoltzmannPolicy.from_q(q_p),
        policy=policy,
    )
