"""Average-cost linear-quadratic regulation under multiplicative and additive
noise: exact model-based policy iteration and an online model-free learner."""

from .config import (
    ExperimentConfig,
    from_dict,
    load_config,
    save_config,
    to_dict,
)
from .experiment import (
    ConvergenceRecord,
    emit_convergence_csv,
    reference_solution,
    run_experiment,
)
from .analysis import (
    MomentOperator,
    average_cost,
    is_admissible,
    moment_operator,
    policy_improvement,
    riccati_residual,
    solve_value_kernel,
    stationary_covariance,
)
from .errors import (
    ConfigError,
    IllConditionedUpdateError,
    InsufficientExcitationError,
    MalformedVectorError,
    NotAdmissibleError,
    SingularSystemError,
    SolverFailure,
    UnreliableKernelError,
    ValidationError,
)
from .packing import kron, symmetrize, unvecs, vech, vecs
from .policy_iteration import (
    PolicyIterationTrace,
    QKernel,
    policy_iteration,
    q_kernel_from_value,
)
from .qlearning import (
    LearnerConfig,
    LearningResult,
    RlsState,
    bls_estimate,
    features,
    learn_from_rollouts,
    noise_shape_kernel,
    policy_from_h,
    rls_update,
    run_online_learning,
)
from .system import (
    CostModel,
    SystemModel,
    Trajectory,
    simulate_closed_loop,
    stage_cost,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "from_dict",
    "load_config",
    "save_config",
    "to_dict",
    "ConvergenceRecord",
    "emit_convergence_csv",
    "reference_solution",
    "run_experiment",
    "MomentOperator",
    "average_cost",
    "is_admissible",
    "moment_operator",
    "policy_improvement",
    "riccati_residual",
    "solve_value_kernel",
    "stationary_covariance",
    "ConfigError",
    "IllConditionedUpdateError",
    "InsufficientExcitationError",
    "MalformedVectorError",
    "NotAdmissibleError",
    "SingularSystemError",
    "SolverFailure",
    "UnreliableKernelError",
    "ValidationError",
    "kron",
    "symmetrize",
    "unvecs",
    "vech",
    "vecs",
    "PolicyIterationTrace",
    "QKernel",
    "policy_iteration",
    "q_kernel_from_value",
    "LearnerConfig",
    "LearningResult",
    "RlsState",
    "bls_estimate",
    "features",
    "learn_from_rollouts",
    "noise_shape_kernel",
    "policy_from_h",
    "rls_update",
    "run_online_learning",
    "CostModel",
    "SystemModel",
    "Trajectory",
    "simulate_closed_loop",
    "stage_cost",
    "step",
]
