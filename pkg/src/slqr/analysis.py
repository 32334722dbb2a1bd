"""Second-moment analysis of the noisy closed loop.

Everything here rests on one object: the closed-loop second-moment operator

    T(X) = F0 X F0^T + sum_i var_i F_i X F_i^T,    F0 = A + B L,

with one scaled factor per multiplicative noise channel (A_i for state
channels, B_j L for input channels). Its matrix form M = sum_c F_c kron F_c
acting on row-major vec(X) decides mean-square stability (rho(M) < 1), gives
the stationary state covariance, and, through its transpose, solves the
cost-side linear equation for the value kernel P of a fixed gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    NotAdmissibleError,
    SingularSystemError,
    UnreliableKernelError,
    ValidationError,
)
from .packing import kron, symmetrize
from .system import CostModel, SystemModel

# A gain is admissible when rho(M) < 1 - ADMISSIBILITY_MARGIN.
ADMISSIBILITY_MARGIN = 1e-9


@dataclass(frozen=True)
class MomentOperator:
    """Matrix of the covariance propagation X -> unvec(matrix @ vec(X)) + offset."""

    matrix: np.ndarray   # (n*n, n*n)
    offset: np.ndarray   # (n*n,) row-major vec of the additive covariance


def closed_loop_factors(model: SystemModel, gain: np.ndarray) -> list[np.ndarray]:
    """Factors F_c of the moment operator, each pre-scaled by sqrt(variance)."""
    gain = np.asarray(gain, dtype=float)
    n, m = model.state_dim, model.input_dim
    if gain.shape != (m, n):
        raise ValidationError(f"gain must have shape {(m, n)}, got {gain.shape}")
    factors = [model.A + model.B @ gain]
    for mat, var in model.state_noise:
        factors.append(np.sqrt(var) * mat)
    for mat, var in model.input_noise:
        factors.append(np.sqrt(var) * (mat @ gain))
    return factors


def moment_operator(model: SystemModel, gain: np.ndarray) -> MomentOperator:
    factors = closed_loop_factors(model, gain)
    mat = sum(kron(f, f) for f in factors)
    return MomentOperator(matrix=mat, offset=model.D.ravel())


def is_admissible(model: SystemModel, gain: np.ndarray,
                  margin: float = ADMISSIBILITY_MARGIN) -> tuple[bool, float]:
    """Mean-square stability check. Returns (flag, spectral radius of M)."""
    op = moment_operator(model, gain)
    rho = float(np.abs(np.linalg.eigvals(op.matrix)).max())
    return rho < 1.0 - margin, rho


def stationary_covariance(model: SystemModel, gain: np.ndarray) -> np.ndarray:
    """Fixed point X = T(X) + D of the covariance propagation."""
    op = moment_operator(model, gain)
    admissible, rho = is_admissible(model, gain)
    if not admissible:
        raise NotAdmissibleError(
            f"gain is not admissible: moment spectral radius {rho:.6f} >= 1",
            spectral_radius=rho,
        )
    n = model.state_dim
    eye = np.eye(n * n)
    try:
        x_vec = np.linalg.solve(eye - op.matrix, op.offset)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"covariance equation is singular (spectral radius {rho:.6f})"
        ) from exc
    x = symmetrize(x_vec.reshape(n, n), rtol=1e-6)
    eigs = np.linalg.eigvalsh(x)
    if eigs.min() < -1e-10 * max(1.0, eigs.max()):
        raise SingularSystemError(
            f"stationary covariance came out indefinite (min eig {eigs.min():.3e})"
        )
    return x


def solve_value_kernel(model: SystemModel, cost: CostModel,
                       gain: np.ndarray) -> np.ndarray:
    """Value kernel P of a fixed admissible gain.

    P solves P = F0^T P F0 + sum_c F_c^T P F_c + Q + L^T R L, the cost-side
    (dual) equation of the moment operator. Solved exactly in vec form:
    (I - M^T) vec(P) = vec(Q + L^T R L).
    """
    gain = np.asarray(gain, dtype=float)
    op = moment_operator(model, gain)
    admissible, rho = is_admissible(model, gain)
    if not admissible:
        raise NotAdmissibleError(
            f"gain is not admissible: moment spectral radius {rho:.6f} >= 1",
            spectral_radius=rho,
        )
    n = model.state_dim
    rhs = cost.Q + gain.T @ cost.R @ gain
    eye = np.eye(n * n)
    try:
        p_vec = np.linalg.solve(eye - op.matrix.T, rhs.ravel())
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"value-kernel equation is singular (spectral radius {rho:.6f})"
        ) from exc
    p = symmetrize(p_vec.reshape(n, n), rtol=1e-6)

    # Residual guard: the solve must reproduce the defining equation.
    recon = sum(f.T @ p @ f for f in closed_loop_factors(model, gain)) + rhs
    rel = np.linalg.norm(recon - p) / max(np.linalg.norm(p), 1.0)
    if rel > 1e-8:
        raise SingularSystemError(
            f"value-kernel solve residual {rel:.3e} too large "
            f"(spectral radius {rho:.6f})"
        )
    return p


def average_cost(value_kernel: np.ndarray, additive_cov: np.ndarray) -> float:
    """Steady-state cost per step of the policy whose kernel is given: tr(P D)."""
    value_kernel = np.asarray(value_kernel, dtype=float)
    additive_cov = np.asarray(additive_cov, dtype=float)
    if value_kernel.shape != additive_cov.shape:
        raise ValidationError(
            f"kernel shape {value_kernel.shape} does not match "
            f"covariance shape {additive_cov.shape}"
        )
    return float(np.trace(value_kernel @ additive_cov))


def input_weight(model: SystemModel, cost: CostModel, value_kernel: np.ndarray) -> np.ndarray:
    """R + B^T P B + sum_j var_j B_j^T P B_j, the input-side curvature."""
    p = value_kernel
    w = cost.R + model.B.T @ p @ model.B
    for mat, var in model.input_noise:
        w = w + var * (mat.T @ p @ mat)
    return w


def policy_improvement(model: SystemModel, cost: CostModel,
                       value_kernel: np.ndarray) -> np.ndarray:
    """One-step greedy gain for a value kernel P.

    L = -(R + B^T P B + sum_j var_j B_j^T P B_j)^-1 B^T P A. The curvature
    matrix must be PD; anything else means the kernel is not trustworthy.
    """
    p = symmetrize(np.asarray(value_kernel, dtype=float), rtol=1e-6)
    w = input_weight(model, cost, p)
    eigs = np.linalg.eigvalsh(w)
    if eigs.min() <= 0:
        raise UnreliableKernelError(
            f"input curvature is not positive definite (min eig {eigs.min():.3e})"
        )
    return -np.linalg.solve(w, model.B.T @ p @ model.A)


def riccati_residual(model: SystemModel, cost: CostModel,
                     value_kernel: np.ndarray) -> np.ndarray:
    """Fixed-point defect of the optimality equation at a candidate kernel.

    Zero exactly at the optimal kernel:
    P - [Q + A^T P A + sum_i var_i A_i^T P A_i - A^T P B W^-1 B^T P A]
    with W the input-side curvature.
    """
    p = symmetrize(np.asarray(value_kernel, dtype=float), rtol=1e-6)
    w = input_weight(model, cost, p)
    eigs = np.linalg.eigvalsh(w)
    if eigs.min() <= 0:
        raise UnreliableKernelError(
            f"input curvature is not positive definite (min eig {eigs.min():.3e})"
        )
    open_loop = cost.Q + model.A.T @ p @ model.A
    for mat, var in model.state_noise:
        open_loop = open_loop + var * (mat.T @ p @ mat)
    gain_term = model.A.T @ p @ model.B @ np.linalg.solve(w, model.B.T @ p @ model.A)
    return p - (open_loop - gain_term)
