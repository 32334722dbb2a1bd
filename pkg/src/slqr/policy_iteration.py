"""Model-based policy iteration for the average-cost problem.

Alternates exact policy evaluation (the value-kernel linear solve) with the
greedy improvement step. Starting from any admissible gain the kernels
decrease monotonically in the semidefinite order down to the optimal kernel,
so the iteration is also the reference solver for the optimality equation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import (
    average_cost,
    input_weight,
    is_admissible,
    policy_improvement,
    solve_value_kernel,
)
from .errors import NotAdmissibleError, ValidationError
from .packing import symmetrize
from .system import CostModel, SystemModel


@dataclass(frozen=True)
class QKernel:
    """Kernel of the quadratic state-input value form z^T H z, z = [x; u].

    Block accessors follow the usual xx/xu/uu split at state_dim.
    """

    matrix: np.ndarray
    state_dim: int

    def __post_init__(self):
        object.__setattr__(self, "matrix",
                           symmetrize(np.asarray(self.matrix, dtype=float)))
        r = self.matrix.shape[0]
        if not 0 < self.state_dim < r:
            raise ValidationError(
                f"state_dim {self.state_dim} must split a {r} x {r} kernel"
            )

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[0] - self.state_dim

    @property
    def xx(self) -> np.ndarray:
        return self.matrix[:self.state_dim, :self.state_dim]

    @property
    def xu(self) -> np.ndarray:
        return self.matrix[:self.state_dim, self.state_dim:]

    @property
    def ux(self) -> np.ndarray:
        return self.matrix[self.state_dim:, :self.state_dim]

    @property
    def uu(self) -> np.ndarray:
        return self.matrix[self.state_dim:, self.state_dim:]

    def value_kernel(self, gain: np.ndarray) -> np.ndarray:
        """Contract back to the state-value kernel: [I; L]^T H [I; L]."""
        gain = np.asarray(gain, dtype=float)
        basis = np.vstack([np.eye(self.state_dim), gain])
        return symmetrize(basis.T @ self.matrix @ basis)


def q_kernel_from_value(model: SystemModel, cost: CostModel,
                        value_kernel: np.ndarray) -> QKernel:
    """Lift a state-value kernel P to the state-input kernel H.

    H_xx = Q + A^T P A + sum_i var_i A_i^T P A_i
    H_xu = A^T P B
    H_uu = R + B^T P B + sum_j var_j B_j^T P B_j
    """
    p = symmetrize(np.asarray(value_kernel, dtype=float), rtol=1e-6)
    n, m = model.state_dim, model.input_dim
    h = np.empty((n + m, n + m))
    hxx = cost.Q + model.A.T @ p @ model.A
    for mat, var in model.state_noise:
        hxx = hxx + var * (mat.T @ p @ mat)
    hxu = model.A.T @ p @ model.B
    h[:n, :n] = hxx
    h[:n, n:] = hxu
    h[n:, :n] = hxu.T
    h[n:, n:] = input_weight(model, cost, p)
    return QKernel(matrix=h, state_dim=n)


@dataclass
class PolicyIterationTrace:
    """Per-iteration history. gains has one more entry than kernels/costs
    (the initial gain), and costs[t] = tr(kernels[t] @ D)."""

    gains: list[np.ndarray]
    kernels: list[np.ndarray]
    costs: list[float]
    converged: bool
    iterations: int


def policy_iteration(model: SystemModel, cost: CostModel, initial_gain: np.ndarray,
                     tol: float = 1e-9, max_iter: int = 100) -> PolicyIterationTrace:
    """Iterate evaluate/improve from an admissible initial gain.

    Stops when successive gains agree to tol in Frobenius norm. Hitting
    max_iter is reported via converged=False, not an exception.
    """
    if tol <= 0:
        raise ValidationError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    gain = np.asarray(initial_gain, dtype=float)
    admissible, rho = is_admissible(model, gain)
    if not admissible:
        raise NotAdmissibleError(
            f"initial gain is not admissible: moment spectral radius {rho:.6f} >= 1",
            spectral_radius=rho,
        )

    gains = [gain]
    kernels: list[np.ndarray] = []
    costs: list[float] = []
    converged = False
    iterations = 0
    for _ in range(max_iter):
        p = solve_value_kernel(model, cost, gains[-1])
        kernels.append(p)
        costs.append(average_cost(p, model.D))
        gain_next = policy_improvement(model, cost, p)
        gains.append(gain_next)
        iterations += 1
        if np.linalg.norm(gain_next - gains[-2]) < tol:
            converged = True
            break
    return PolicyIterationTrace(gains=gains, kernels=kernels, costs=costs,
                                converged=converged, iterations=iterations)
