"""System and cost models plus closed-loop simulation.

The plant is linear with multiplicative noise on both the state and input
matrices and additive Gaussian noise:

    x_{k+1} = (A + sum_i alpha_ik A_i) x_k + (B + sum_j beta_jk B_j) u_k + d_k

with alpha_ik ~ N(0, var_i), beta_jk ~ N(0, var_j), d_k ~ N(0, D), all
mutually independent across channels and time, and x_0 ~ N(0, X0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Definiteness margin: smallest eigenvalue must exceed this for a PD check.
PD_EIG_FLOOR = 1e-12


def _as_matrix(mat, name: str) -> np.ndarray:
    arr = np.asarray(mat, dtype=float)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be a 2-d matrix, got shape {arr.shape}")
    return arr


def _check_psd(mat: np.ndarray, name: str) -> None:
    eigs = np.linalg.eigvalsh(mat)
    if eigs.min() < -PD_EIG_FLOOR * max(1.0, abs(eigs.max())):
        raise ValidationError(
            f"{name} must be positive semidefinite, smallest eigenvalue {eigs.min():.3e}"
        )


def _check_pd(mat: np.ndarray, name: str) -> None:
    eigs = np.linalg.eigvalsh(mat)
    if eigs.min() <= PD_EIG_FLOOR:
        raise ValidationError(
            f"{name} must be positive definite, smallest eigenvalue {eigs.min():.3e}"
        )


@dataclass(frozen=True)
class SystemModel:
    """Plant description.

    state_noise / input_noise are lists of (matrix, variance) pairs: the
    direction each scalar noise channel acts in, and its variance. Set
    allow_degenerate_noise=True only in deterministic unit tests; it relaxes
    the D > 0 requirement to D >= 0 (and X0 may be zero as always).
    """

    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    X0: np.ndarray
    state_noise: list[tuple[np.ndarray, float]] = field(default_factory=list)
    input_noise: list[tuple[np.ndarray, float]] = field(default_factory=list)
    allow_degenerate_noise: bool = False

    def __post_init__(self):
        from .packing import symmetrize

        object.__setattr__(self, "A", _as_matrix(self.A, "A"))
        object.__setattr__(self, "B", _as_matrix(self.B, "B"))
        object.__setattr__(self, "D", symmetrize(_as_matrix(self.D, "D")))
        object.__setattr__(self, "X0", symmetrize(_as_matrix(self.X0, "X0")))
        object.__setattr__(
            self,
            "state_noise",
            [(_as_matrix(mat, f"state_noise[{i}]"), float(var))
             for i, (mat, var) in enumerate(self.state_noise)],
        )
        object.__setattr__(
            self,
            "input_noise",
            [(_as_matrix(mat, f"input_noise[{j}]"), float(var))
             for j, (mat, var) in enumerate(self.input_noise)],
        )

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def input_dim(self) -> int:
        return self.B.shape[1]

    def validate(self) -> None:
        """Check shapes, variance signs, and covariance definiteness."""
        n, m = self.state_dim, self.input_dim
        if self.A.shape != (n, n):
            raise ValidationError(f"A must be square, got shape {self.A.shape}")
        if self.B.shape != (n, m):
            raise ValidationError(
                f"B must have {n} rows to match A, got shape {self.B.shape}"
            )
        for i, (mat, var) in enumerate(self.state_noise):
            if mat.shape != (n, n):
                raise ValidationError(
                    f"state_noise[{i}] matrix must have shape {(n, n)}, got {mat.shape}"
                )
            if var < 0:
                raise ValidationError(f"state_noise[{i}] variance must be >= 0, got {var}")
        for j, (mat, var) in enumerate(self.input_noise):
            if mat.shape != (n, m):
                raise ValidationError(
                    f"input_noise[{j}] matrix must have shape {(n, m)}, got {mat.shape}"
                )
            if var < 0:
                raise ValidationError(f"input_noise[{j}] variance must be >= 0, got {var}")
        if self.D.shape != (n, n):
            raise ValidationError(f"D must have shape {(n, n)}, got {self.D.shape}")
        if self.X0.shape != (n, n):
            raise ValidationError(f"X0 must have shape {(n, n)}, got {self.X0.shape}")
        if self.allow_degenerate_noise:
            _check_psd(self.D, "D")
        else:
            _check_pd(self.D, "D")
        _check_psd(self.X0, "X0")


@dataclass(frozen=True)
class CostModel:
    """Quadratic stage cost x^T Q x + u^T R u with Q >= 0 and R > 0."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        from .packing import symmetrize

        object.__setattr__(self, "Q", symmetrize(_as_matrix(self.Q, "Q")))
        object.__setattr__(self, "R", symmetrize(_as_matrix(self.R, "R")))

    def validate(self, model: SystemModel | None = None) -> None:
        _check_psd(self.Q, "Q")
        _check_pd(self.R, "R")
        if model is not None:
            n, m = model.state_dim, model.input_dim
            if self.Q.shape != (n, n):
                raise ValidationError(f"Q must have shape {(n, n)}, got {self.Q.shape}")
            if self.R.shape != (m, m):
                raise ValidationError(f"R must have shape {(m, m)}, got {self.R.shape}")


@dataclass
class Trajectory:
    """A closed-loop rollout of n_steps transitions.

    states has n_steps+1 rows. inputs also has n_steps+1 rows: rows 0..n_steps-1
    are the inputs actually applied (feedback plus exploration probe), and the
    final row is the unprobed feedback input at the terminal state, so that
    consumers can form the (state, on-policy input) pair at every index.
    costs[k] is the stage cost of (states[k], inputs[k]) for k < n_steps.
    """

    states: np.ndarray   # (n_steps + 1, n)
    inputs: np.ndarray   # (n_steps + 1, m)
    costs: np.ndarray    # (n_steps,)
    seed: int

    @property
    def n_steps(self) -> int:
        return self.costs.shape[0]


def noise_factor(cov: np.ndarray) -> np.ndarray:
    """A factor G with G G^T = cov. Cholesky when PD, eigh square root otherwise."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigs, vecs_ = np.linalg.eigh(cov)
        if eigs.min() < -1e-10 * max(1.0, abs(eigs.max())):
            raise ValidationError(
                f"covariance has negative eigenvalue {eigs.min():.3e}"
            ) from None
        return vecs_ * np.sqrt(np.clip(eigs, 0.0, None))


def step(model: SystemModel, x: np.ndarray, u: np.ndarray,
         rng: np.random.Generator) -> np.ndarray:
    """One plant transition. Consumes p + q scalar draws then n draws for d."""
    return _step(model, x, u, rng, noise_factor(model.D))


def _step(model, x, u, rng, d_factor):
    A_eff = model.A
    for mat, var in model.state_noise:
        A_eff = A_eff + (np.sqrt(var) * rng.standard_normal()) * mat
    B_eff = model.B
    for mat, var in model.input_noise:
        B_eff = B_eff + (np.sqrt(var) * rng.standard_normal()) * mat
    d = d_factor @ rng.standard_normal(model.state_dim)
    return A_eff @ x + B_eff @ u + d


def stage_cost(cost: CostModel, x: np.ndarray, u: np.ndarray) -> float:
    return float(x @ cost.Q @ x + u @ cost.R @ u)


def simulate_closed_loop(model: SystemModel, cost: CostModel, gain: np.ndarray,
                         n_steps: int, probe_var: float, seed) -> Trajectory:
    """Roll out u_k = gain @ x_k + e_k with e_k ~ N(0, probe_var * I).

    Draw order is fixed for reproducibility: n draws for x0, then per step the
    m-vector probe (drawn even when probe_var == 0, so the noise stream does
    not depend on the probe setting), p + q channel scalars, and the n-vector
    for the additive noise. Costs are charged on the input actually applied.
    """
    gain = np.asarray(gain, dtype=float)
    n, m = model.state_dim, model.input_dim
    if gain.shape != (m, n):
        raise ValidationError(f"gain must have shape {(m, n)}, got {gain.shape}")
    if n_steps < 1:
        raise ValidationError(f"n_steps must be >= 1, got {n_steps}")
    if probe_var < 0:
        raise ValidationError(f"probe_var must be >= 0, got {probe_var}")

    rng = np.random.default_rng(seed)
    d_factor = noise_factor(model.D)
    x0_factor = noise_factor(model.X0)
    p, q = len(model.state_noise), len(model.input_noise)
    sqrt_vars = np.sqrt([var for _, var in model.state_noise]
                        + [var for _, var in model.input_noise])

    states = np.empty((n_steps + 1, n))
    inputs = np.empty((n_steps + 1, m))
    costs = np.empty(n_steps)

    states[0] = x0_factor @ rng.standard_normal(n)
    # One block of draws per step, consumed in the documented order.
    draws = rng.standard_normal((n_steps, m + p + q + n))
    probes = np.sqrt(probe_var) * draws[:, :m]
    channels = sqrt_vars * draws[:, m:m + p + q] if p + q else draws[:, m:m]
    additive = draws[:, m + p + q:] @ d_factor.T

    x = states[0]
    for k in range(n_steps):
        u = gain @ x + probes[k]
        inputs[k] = u
        costs[k] = x @ cost.Q @ x + u @ cost.R @ u
        A_eff = model.A
        for i in range(p):
            A_eff = A_eff + channels[k, i] * model.state_noise[i][0]
        B_eff = model.B
        for j in range(q):
            B_eff = B_eff + channels[k, p + j] * model.input_noise[j][0]
        x = A_eff @ x + B_eff @ u + additive[k]
        states[k + 1] = x

    inputs[n_steps] = gain @ x
    seed_int = seed if isinstance(seed, (int, np.integer)) else -1
    return Trajectory(states=states, inputs=inputs, costs=costs, seed=int(seed_int))
