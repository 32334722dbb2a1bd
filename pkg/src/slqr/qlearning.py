"""Online model-free learning of the optimal gain from rollout data.

Each iteration rolls the current gain out with an exploration probe, fits the
quadratic state-input value kernel H of that gain by least squares on the
one-step cost identity

    phi(z_k)^T vecs(H) = c_k - lambda + phi(zbar_{k+1})^T vecs(H),

where z_k stacks the state with the input actually applied, zbar_{k+1} uses
the unprobed feedback input at the next state, and lambda is the policy's
average cost. With the additive-noise covariance D known, lambda is
eliminated exactly through lambda = tr(H kappa) with kappa = [I; L] D [I; L]^T;
without D it is replaced by the empirical average cost. The fit runs either
as one batch solve or as the equivalent recursive update that never stores
the data matrix. The improved gain then comes from the uu/ux blocks of H.

The learner sees only a rollout sampler, stage costs, and optionally D; the
plant matrices stay out of reach by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    IllConditionedUpdateError,
    InsufficientExcitationError,
    SolverFailure,
    UnreliableKernelError,
    ValidationError,
)
from .packing import packed_length, unvecs, vech
from .policy_iteration import QKernel
from .system import CostModel, SystemModel, Trajectory, simulate_closed_loop

# Conditioning ceiling for the uu block when extracting a gain.
MAX_KERNEL_CONDITION = 1e8

COST_MODES = ("known_d", "empirical")


def features(z: np.ndarray) -> np.ndarray:
    """Quadratic feature vector: vech of the outer product of z with itself."""
    z = np.asarray(z, dtype=float)
    return vech(np.outer(z, z))


def feature_matrix(states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Rows of quadratic features for a batch of stacked (state, input) pairs."""
    z = np.hstack([states, inputs])              # (N, r)
    outer = np.einsum("ki,kj->kij", z, z)        # (N, r, r)
    rows, cols = np.triu_indices(z.shape[1])
    return outer[:, rows, cols]


def noise_shape_kernel(gain: np.ndarray, additive_cov: np.ndarray) -> np.ndarray:
    """kappa = [I; L] D [I; L]^T: how the additive noise spreads over z-space."""
    gain = np.asarray(gain, dtype=float)
    additive_cov = np.asarray(additive_cov, dtype=float)
    n = additive_cov.shape[0]
    if gain.shape[1] != n:
        raise ValidationError(
            f"gain with {gain.shape[1]} columns does not match covariance size {n}"
        )
    basis = np.vstack([np.eye(n), gain])
    return basis @ additive_cov @ basis.T


@dataclass
class RlsState:
    """Running state of the recursive estimator.

    gram_inv tracks the inverse of (init_scale^-1 I + sum_k phi_k g_k^T); the
    instrument phi and regressor g differ, so it is not symmetric in general.
    weighted_costs accumulates sum_k phi_k c_k. The kernel estimate at any
    point is unvecs(gram_inv @ weighted_costs).
    """

    gram_inv: np.ndarray
    weighted_costs: np.ndarray
    samples_seen: int = 0


def initial_rls_state(dim: int, init_scale: float) -> RlsState:
    if init_scale <= 0:
        raise ValidationError(f"init_scale must be > 0, got {init_scale}")
    return RlsState(gram_inv=init_scale * np.eye(dim),
                    weighted_costs=np.zeros(dim), samples_seen=0)


def rls_update(state: RlsState, feats: np.ndarray, next_feats: np.ndarray,
               noise_correction: np.ndarray, cost: float) -> RlsState:
    """Fold one transition into the estimator.

    The rank-one inverse update for the regressor g = feats - next_feats +
    noise_correction against the instrument feats. Raises
    IllConditionedUpdateError when the update denominator is numerically zero;
    the sample can be skipped and learning continued.
    """
    g = feats - next_feats + noise_correction
    gram_feats = state.gram_inv @ feats
    g_gram = g @ state.gram_inv
    denom = 1.0 + g_gram @ feats
    if abs(denom) < 1e-12:
        raise IllConditionedUpdateError(
            f"update denominator {denom:.3e} at sample {state.samples_seen}"
        )
    return RlsState(
        gram_inv=state.gram_inv - np.outer(gram_feats, g_gram) / denom,
        weighted_costs=state.weighted_costs + feats * cost,
        samples_seen=state.samples_seen + 1,
    )


def rls_kernel(state: RlsState, state_dim: int) -> QKernel:
    """Current kernel estimate held by the recursive state."""
    vec = state.gram_inv @ state.weighted_costs
    if not np.all(np.isfinite(vec)):
        raise UnreliableKernelError("kernel estimate contains non-finite entries")
    return QKernel(matrix=unvecs(vec), state_dim=state_dim)


def _regression_parts(traj: Trajectory, gain: np.ndarray):
    """Instrument features, next-state features, and aligned costs of a rollout."""
    gain = np.asarray(gain, dtype=float)
    n = traj.states.shape[1]
    if gain.shape != (traj.inputs.shape[1], n):
        raise ValidationError(
            f"gain shape {gain.shape} does not match trajectory dimensions"
        )
    phi = feature_matrix(traj.states[:-1], traj.inputs[:-1])
    next_inputs = traj.states[1:] @ gain.T      # unprobed feedback at x_{k+1}
    phi_next = feature_matrix(traj.states[1:], next_inputs)
    return phi, phi_next, traj.costs


def bls_estimate(traj: Trajectory, gain: np.ndarray,
                 noise_cov: np.ndarray | None = None) -> QKernel:
    """Batch least-squares kernel fit over one rollout.

    With noise_cov given, the average cost is eliminated through the noise
    shape kernel; with noise_cov None the empirical mean cost is subtracted
    from the targets instead.
    """
    phi, phi_next, costs = _regression_parts(traj, gain)
    n = traj.states.shape[1]
    n_samples, s = phi.shape
    if n_samples < s:
        raise InsufficientExcitationError(
            f"{n_samples} samples cannot identify {s} kernel coefficients; "
            f"use a longer rollout"
        )
    if noise_cov is not None:
        correction = vech(noise_shape_kernel(gain, noise_cov))
        regressors = phi - phi_next + correction
        targets = costs
    else:
        regressors = phi - phi_next
        targets = costs - costs.mean()
    gram = phi.T @ regressors
    rhs = phi.T @ targets
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise InsufficientExcitationError(
            f"normal matrix condition number {cond:.3e}; use a longer rollout "
            f"or a larger probe variance"
        )
    vec = np.linalg.solve(gram, rhs)
    return QKernel(matrix=unvecs(vec), state_dim=n)


def policy_from_h(kernel: QKernel) -> np.ndarray:
    """Greedy gain encoded by a state-input kernel: L = -H_uu^-1 H_ux."""
    w = kernel.uu
    eigs = np.linalg.eigvalsh(w)
    if eigs.min() <= 0:
        raise UnreliableKernelError(
            f"input block of the kernel is not positive definite "
            f"(min eig {eigs.min():.3e})"
        )
    if eigs.max() / eigs.min() > MAX_KERNEL_CONDITION:
        raise UnreliableKernelError(
            f"input block condition number {eigs.max() / eigs.min():.3e} "
            f"exceeds {MAX_KERNEL_CONDITION:.1e}"
        )
    return -np.linalg.solve(w, kernel.ux)


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters of the online learner.

    initial_gain must be admissible for the plant the sampler wraps; the
    learner cannot check that without a model, so the caller asserts it.
    cost_mode "known_d" uses the additive-noise covariance to pin the average
    cost inside the regression; "empirical" subtracts the measured mean cost.
    """

    initial_gain: np.ndarray
    rollout_len: int
    probe_var: float
    rls_init_scale: float
    max_iterations: int
    gain_tol: float
    seed: int
    cost_mode: str = "known_d"

    def __post_init__(self):
        object.__setattr__(self, "initial_gain",
                           np.asarray(self.initial_gain, dtype=float))
        if self.rollout_len < 1:
            raise ValidationError(f"rollout_len must be >= 1, got {self.rollout_len}")
        if self.probe_var <= 0:
            raise ValidationError(f"probe_var must be > 0, got {self.probe_var}")
        if self.rls_init_scale <= 0:
            raise ValidationError(
                f"rls_init_scale must be > 0, got {self.rls_init_scale}"
            )
        if self.max_iterations < 1:
            raise ValidationError(
                f"max_iterations must be >= 1, got {self.max_iterations}"
            )
        if self.gain_tol <= 0:
            raise ValidationError(f"gain_tol must be > 0, got {self.gain_tol}")
        if self.cost_mode not in COST_MODES:
            raise ValidationError(
                f"cost_mode must be one of {COST_MODES}, got {self.cost_mode!r}"
            )


@dataclass
class LearningResult:
    """gains includes the initial gain, so it is one longer than kernels.
    cost_estimates[t] is the average-cost estimate of iteration t's policy."""

    gains: list[np.ndarray]
    kernels: list[QKernel]
    cost_estimates: list[float]
    converged: bool
    iterations: int
    skipped_updates: list[int] = field(default_factory=list)


def iteration_seed(base_seed: int, iteration: int) -> int:
    """Deterministic per-iteration rollout seed on an independent stream."""
    return int(np.random.SeedSequence([base_seed, iteration]).generate_state(1)[0])


def _fit_iteration(traj: Trajectory, gain: np.ndarray,
                   noise_cov: np.ndarray | None,
                   init_scale: float) -> tuple[QKernel, float, int]:
    """One recursive pass over a rollout. Returns (kernel, cost estimate, skips)."""
    phi, phi_next, costs = _regression_parts(traj, gain)
    n = traj.states.shape[1]
    n_samples, s = phi.shape
    if n_samples < s:
        raise InsufficientExcitationError(
            f"{n_samples} samples cannot identify {s} kernel coefficients; "
            f"use a longer rollout"
        )
    if noise_cov is not None:
        correction = vech(noise_shape_kernel(gain, noise_cov))
        targets = costs
    else:
        correction = np.zeros(s)
        targets = costs - costs.mean()

    state = initial_rls_state(s, init_scale)
    skipped = 0
    for k in range(n_samples):
        try:
            state = rls_update(state, phi[k], phi_next[k], correction, targets[k])
        except IllConditionedUpdateError:
            skipped += 1
    kernel = rls_kernel(state, n)
    if noise_cov is not None:
        from .packing import vecs
        cost_estimate = float(correction @ vecs(kernel.matrix))
    else:
        cost_estimate = float(costs.mean())
    return kernel, cost_estimate, skipped


def learn_from_rollouts(sampler: Callable[[np.ndarray, int], Trajectory],
                        config: LearnerConfig,
                        noise_cov: np.ndarray | None = None) -> LearningResult:
    """Run the online learning loop against an opaque rollout sampler.

    sampler(gain, seed) must return a Trajectory rolled out under that gain
    with the configured probe. This function is the whole model-free surface:
    it touches nothing of the plant beyond sampled data (plus noise_cov in
    known_d mode).
    """
    if config.cost_mode == "known_d" and noise_cov is None:
        raise ValidationError("cost_mode 'known_d' requires the additive covariance")
    if config.cost_mode == "empirical":
        noise_cov = None

    gains = [config.initial_gain]
    kernels: list[QKernel] = []
    cost_estimates: list[float] = []
    skipped: list[int] = []
    converged = False
    iterations = 0
    for tau in range(config.max_iterations):
        try:
            traj = sampler(gains[-1], iteration_seed(config.seed, tau))
            kernel, cost_estimate, skips = _fit_iteration(
                traj, gains[-1], noise_cov, config.rls_init_scale)
            gain_next = policy_from_h(kernel)
        except SolverFailure as exc:
            raise type(exc)(f"iteration {tau}: {exc}") from exc
        kernels.append(kernel)
        cost_estimates.append(cost_estimate)
        skipped.append(skips)
        gains.append(gain_next)
        iterations += 1
        if np.linalg.norm(gain_next - gains[-2]) < config.gain_tol:
            converged = True
            break
    return LearningResult(gains=gains, kernels=kernels,
                          cost_estimates=cost_estimates, converged=converged,
                          iterations=iterations, skipped_updates=skipped)


def run_online_learning(model: SystemModel, cost: CostModel,
                        config: LearnerConfig) -> LearningResult:
    """Wire the learner to a plant simulator and run it.

    The model is used only to build the rollout sampler (and to hand over D
    in known_d mode); the learning loop itself never reads the plant matrices.
    """
    def sampler(gain: np.ndarray, seed: int) -> Trajectory:
        return simulate_closed_loop(model, cost, gain, config.rollout_len,
                                    config.probe_var, seed)

    noise_cov = model.D if config.cost_mode == "known_d" else None
    return learn_from_rollouts(sampler, config, noise_cov)
