"""Consensus ADMM for distributed sparse system identification.

Each ED holds observations Y_j = theta X_j + noise and a local lasso-style
objective; the server keeps the consensus copy. Rounds run the three-step
update with partial participation, and a descent certificate with explicit
constants is available in the smooth (no-l1) regime.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .workload import Workload

logger = logging.getLogger(__name__)


class PenaltyRegimeError(ValueError):
    """Penalty below certificate regime: rho/2 - kappa_j/rho not positive."""


def soft_threshold(v: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise sign(v) * max(|v| - tau, 0)."""
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


@dataclass
class EdLocalProblem:
    """One ED's data: observations Y, states X, and the smooth-part constant."""

    Y: np.ndarray
    X: np.ndarray
    kappa: float = field(init=False)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.Y.shape[1] != self.X.shape[1]:
            raise ValueError("Y and X must have matching sample counts")
        # Largest singular value of X X^T: Lipschitz constant of the smooth part.
        self.kappa = float(np.linalg.norm(self.X @ self.X.T, 2))

    def smooth_loss(self, theta: np.ndarray) -> float:
        return 0.5 * float(np.linalg.norm(self.Y - theta @ self.X, "fro") ** 2)

    def smooth_grad(self, theta: np.ndarray) -> np.ndarray:
        return (theta @ self.X - self.Y) @ self.X.T


@dataclass
class AdmmState:
    """Full consensus-ADMM state at one round."""

    problems: List[EdLocalProblem]
    theta0: np.ndarray
    thetas: List[np.ndarray]
    lambdas: List[np.ndarray]
    rho: float
    varrho: float
    round_idx: int = 0

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError(f"penalty rho must be positive, got {self.rho}")
        if self.varrho < 0:
            raise ValueError(f"sparsity weight must be non-negative, got {self.varrho}")
        shapes = {self.theta0.shape} | {t.shape for t in self.thetas}
        shapes |= {l.shape for l in self.lambdas}
        if len(shapes) != 1:
            raise ValueError("theta0, thetas, and lambdas must share one shape")

    @property
    def num_eds(self) -> int:
        return len(self.problems)

    def clone(self) -> "AdmmState":
        return AdmmState(
            problems=self.problems,
            theta0=self.theta0.copy(),
            thetas=[t.copy() for t in self.thetas],
            lambdas=[l.copy() for l in self.lambdas],
            rho=self.rho,
            varrho=self.varrho,
            round_idx=self.round_idx,
        )


def make_admm_state(
    num_eds: int = 10,
    dim: int = 100,
    samples_per_ed: int = 30,
    noise_variance_slope: float = 0.015,
    varrho: float = 0.1,
    rho: float = 0.1,
    sparsity: float = 0.5,
    seed=0,
) -> Tuple[AdmmState, np.ndarray]:
    """Seeded system-identification instance; returns (state, true matrix).

    ED j's observation noise has variance noise_variance_slope * (j+1), so
    devices see different data quality.
    """
    rng = np.random.default_rng(seed)
    theta_true = rng.normal(size=(dim, dim))
    theta_true[rng.random(size=(dim, dim)) < sparsity] = 0.0
    problems = []
    for j in range(num_eds):
        X = rng.normal(size=(dim, samples_per_ed))
        noise = rng.normal(
            scale=np.sqrt(noise_variance_slope * (j + 1)), size=(dim, samples_per_ed)
        )
        problems.append(EdLocalProblem(Y=theta_true @ X + noise, X=X))
    zeros = np.zeros((dim, dim))
    state = AdmmState(
        problems=problems,
        theta0=zeros.copy(),
        thetas=[zeros.copy() for _ in range(num_eds)],
        lambdas=[zeros.copy() for _ in range(num_eds)],
        rho=rho,
        varrho=varrho,
    )
    return state, theta_true


def update_consensus(state: AdmmState) -> np.ndarray:
    """Closed-form minimizer of the augmented Lagrangian in theta0."""
    stacked = np.stack(
        [theta + lam / state.rho for theta, lam in zip(state.thetas, state.lambdas)]
    )
    return stacked.mean(axis=0)


def update_local(
    state: AdmmState,
    ed_id: int,
    theta0: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> np.ndarray:
    """Proximal-gradient (ISTA) solve of the ED subproblem, warm-started.

    Minimizes smooth_loss + varrho*||.||_1 + <lambda, theta - theta0>
    + (rho/2)*||theta - theta0||^2 with step 1/(kappa_j + rho). Stops at the
    minimum-norm subgradient residual tol or the iteration cap; hitting the
    cap is logged, not fatal.
    """
    problem = state.problems[ed_id]
    theta0 = state.theta0 if theta0 is None else theta0
    lam = state.lambdas[ed_id]
    rho, varrho = state.rho, state.varrho
    step = 1.0 / (problem.kappa + rho)
    theta = state.thetas[ed_id].copy()
    residual = np.inf
    for _ in range(max_iter):
        grad = problem.smooth_grad(theta) + lam + rho * (theta - theta0)
        theta = soft_threshold(theta - step * grad, step * varrho)
        grad = problem.smooth_grad(theta) + lam + rho * (theta - theta0)
        if varrho > 0:
            sub = np.where(
                theta != 0,
                grad + varrho * np.sign(theta),
                np.sign(grad) * np.maximum(np.abs(grad) - varrho, 0.0),
            )
        else:
            sub = grad
        residual = float(np.linalg.norm(sub, "fro"))
        if residual <= tol:
            break
    else:
        logger.warning(
            "ED %d local solve hit the %d-iteration cap (residual %.3e)",
            ed_id,
            max_iter,
            residual,
        )
    return theta


def update_dual(
    state: AdmmState, ed_id: int, theta_new: np.ndarray, theta0_new: np.ndarray
) -> np.ndarray:
    """Dual ascent: lambda + rho * (theta_j - theta0)."""
    return state.lambdas[ed_id] + state.rho * (theta_new - theta0_new)


def augmented_lagrangian(state: AdmmState) -> float:
    """Sum of local objectives, dual couplings, and quadratic penalties."""
    total = 0.0
    for problem, theta, lam in zip(state.problems, state.thetas, state.lambdas):
        diff = theta - state.theta0
        total += problem.smooth_loss(theta)
        total += state.varrho * float(np.abs(theta).sum())
        total += float(np.sum(lam * diff))
        total += 0.5 * state.rho * float(np.linalg.norm(diff, "fro") ** 2)
    return total


def admm_marginal_utility(
    theta_curr: np.ndarray, theta_prev: np.ndarray, alpha: float = 1.0
) -> float:
    """Utility surrogate: alpha * squared Frobenius change of the local copy."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return alpha * float(np.linalg.norm(theta_curr - theta_prev, "fro") ** 2)


def run_round(
    state: AdmmState,
    selected: Iterable[int],
    tol: float = 1e-8,
    max_iter: int = 500,
) -> AdmmState:
    """One three-step round: consensus, selected-ED locals, selected-ED duals.

    Unselected EDs keep their primal and dual variables unchanged.
    """
    selected = set(selected)
    out = state.clone()
    theta0_new = update_consensus(state)
    out.theta0 = theta0_new
    for j in selected:
        theta_new = update_local(state, j, theta0=theta0_new, tol=tol, max_iter=max_iter)
        out.thetas[j] = theta_new
        out.lambdas[j] = update_dual(state, j, theta_new, theta0_new)
    out.round_idx = state.round_idx + 1
    return out


def descent_certificate(
    state_k: AdmmState,
    state_k1: AdmmState,
    selected: Iterable[int],
    tolerance: float = 1e-8,
) -> Tuple[float, bool]:
    """Explicit-constant descent bound for one smooth-mode round.

    bound = sum over selected of (rho/2 - kappa_j/rho)*||dtheta_j||^2
    + (rho/2)*||dtheta0||^2; holds when the Lagrangian drop covers it.
    Requires rho/2 - kappa_j/rho > 0 for every selected ED.
    """
    selected = sorted(set(selected))
    rho = state_k.rho
    bound = 0.5 * rho * float(np.linalg.norm(state_k1.theta0 - state_k.theta0, "fro") ** 2)
    for j in selected:
        kappa = state_k.problems[j].kappa
        coeff = rho / 2 - kappa / rho
        if coeff <= 0:
            raise PenaltyRegimeError(
                f"penalty below certificate regime: rho/2 - kappa_{j}/rho = {coeff:.3g}"
            )
        bound += coeff * float(
            np.linalg.norm(state_k1.thetas[j] - state_k.thetas[j], "fro") ** 2
        )
    drop = augmented_lagrangian(state_k) - augmented_lagrangian(state_k1)
    return bound, drop >= bound - tolerance


def relative_gap(state: AdmmState, theta_true: np.ndarray) -> float:
    """Frobenius distance of the consensus copy to the true matrix, relative."""
    return float(
        np.linalg.norm(state.theta0 - theta_true, "fro")
        / np.linalg.norm(theta_true, "fro")
    )


@dataclass
class AdmmParams:
    """Scenario parameters; the default desk preset keeps rounds fast."""

    num_eds: int = 5
    dim: int = 20
    samples_per_ed: int = 30
    noise_variance_slope: float = 0.015
    varrho: float = 0.1
    rho: float = 0.1
    sparsity: float = 0.5
    solver_tol: float = 1e-8
    solver_cap: int = 500
    bits_per_entry: float = 32.0


class AdmmWorkload(Workload):
    """Distributed system identification under RB-budgeted participation.

    Delta for an ED is the squared change of its local copy in its last
    participating round; it is retained (not zeroed) while the ED sits out,
    so frozen EDs stay eligible for selection.
    """

    def __init__(self, params: AdmmParams, seed):
        self.params = params
        self.num_eds = params.num_eds
        self.state, self.theta_true = make_admm_state(
            num_eds=params.num_eds,
            dim=params.dim,
            samples_per_ed=params.samples_per_ed,
            noise_variance_slope=params.noise_variance_slope,
            varrho=params.varrho,
            rho=params.rho,
            sparsity=params.sparsity,
            seed=seed,
        )
        # No change history yet: uniform positive deltas let the first-round
        # selection be driven by the budget and channel alone.
        self._deltas = np.ones(params.num_eds)

    def marginal_utilities(self) -> List[Tuple[int, float]]:
        return list(enumerate(self._deltas.tolist()))

    def ingest(self, selected: Iterable[int]) -> None:
        selected = sorted(set(selected))
        new_state = run_round(
            self.state, selected, tol=self.params.solver_tol, max_iter=self.params.solver_cap
        )
        for j in selected:
            self._deltas[j] = admm_marginal_utility(
                new_state.thetas[j], self.state.thetas[j]
            )
        self.state = new_state

    def goal_value(self) -> float:
        return augmented_lagrangian(self.state)

    def payload_bits(self, ed_id: int) -> float:
        # Primal and dual copies are both transmitted.
        return 2 * self.state.theta0.size * self.params.bits_per_entry

    def consensus_residual(self) -> float:
        return max(
            float(np.linalg.norm(t - self.state.theta0, "fro")) for t in self.state.thetas
        )

    def relative_gap(self) -> float:
        return relative_gap(self.state, self.theta_true)
