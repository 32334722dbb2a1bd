"""Experiment orchestration: run the configured solvers, compare every
iterate against the model-based reference optimum, and write machine-readable
convergence traces plus a structured summary.

Outputs in the configured directory:
    convergence.csv   one row per (method, seed, iteration)
    summary.json      reference solution, final iterates, flags
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .analysis import average_cost, is_admissible, solve_value_kernel
from .config import ExperimentConfig
from .errors import NotAdmissibleError, SolverFailure
from .policy_iteration import PolicyIterationTrace, policy_iteration
from .qlearning import LearningResult, run_online_learning
from .system import CostModel, SystemModel

# The reference optimum is solved tighter than any configured run.
REFERENCE_TOL = 1e-10
REFERENCE_MAX_ITER = 500

CSV_HEADER = ("method", "seed", "tau", "gain_error", "rel_cost_error", "lambda")


@dataclass(frozen=True)
class ConvergenceRecord:
    method: str
    seed: int
    tau: int
    gain_error: float
    rel_cost_error: float
    lam: float


def reference_solution(model: SystemModel, cost: CostModel):
    """Optimal (P*, L*, lambda*) from policy iteration off the zero gain."""
    n, m = model.state_dim, model.input_dim
    trace = policy_iteration(model, cost, np.zeros((m, n)),
                             tol=REFERENCE_TOL, max_iter=REFERENCE_MAX_ITER)
    if not trace.converged:
        raise SolverFailure(
            f"reference solve did not converge in {REFERENCE_MAX_ITER} iterations"
        )
    return trace.kernels[-1], trace.gains[-1], trace.costs[-1]


def _records_from_pi(trace: PolicyIterationTrace, model: SystemModel,
                     cost: CostModel, gain_ref: np.ndarray,
                     lam_ref: float) -> list[ConvergenceRecord]:
    records = []
    lams = list(trace.costs)
    # Give the final improved gain its own row, with its exactly evaluated cost.
    lams.append(average_cost(solve_value_kernel(model, cost, trace.gains[-1]), model.D))
    for tau, (gain, lam) in enumerate(zip(trace.gains, lams)):
        records.append(ConvergenceRecord(
            method="model_based", seed=0, tau=tau,
            gain_error=float(np.linalg.norm(gain - gain_ref)),
            rel_cost_error=abs(lam - lam_ref) / abs(lam_ref),
            lam=lam,
        ))
    return records


def _records_from_learning(result: LearningResult, seed: int,
                           gain_ref: np.ndarray,
                           lam_ref: float) -> list[ConvergenceRecord]:
    records = []
    lams = list(result.cost_estimates)
    # The returned gain never gets its own evaluation pass; repeat the last
    # estimate so the trace ends at the gain the learner actually returns.
    lams.append(result.cost_estimates[-1])
    for tau, (gain, lam) in enumerate(zip(result.gains, lams)):
        records.append(ConvergenceRecord(
            method="model_free", seed=seed, tau=tau,
            gain_error=float(np.linalg.norm(gain - gain_ref)),
            rel_cost_error=abs(lam - lam_ref) / abs(lam_ref),
            lam=lam,
        ))
    return records


def emit_convergence_csv(records: list[ConvergenceRecord], path: str | Path) -> None:
    """Write records sorted by (method, seed, tau), full-precision floats."""
    ordered = sorted(records, key=lambda r: (r.method, r.seed, r.tau))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in ordered:
            writer.writerow([rec.method, rec.seed, rec.tau,
                             repr(rec.gain_error), repr(rec.rel_cost_error),
                             repr(rec.lam)])


def run_experiment(config: ExperimentConfig,
                   output_dir: str | Path | None = None) -> dict:
    """Run the configured methods and write convergence.csv + summary.json.

    Returns the summary as a dict. Solver or learner failures abort with the
    original exception after flushing whatever records were collected; the
    message names the method, seed, and iteration.
    """
    out = Path(output_dir if output_dir is not None else config.output_dir)
    model, cost = config.model, config.cost
    kernel_ref, gain_ref, lam_ref = reference_solution(model, cost)

    records: list[ConvergenceRecord] = []
    summary: dict = {
        "reference": {
            "P": kernel_ref.tolist(),
            "L": gain_ref.tolist(),
            "lambda": lam_ref,
        },
    }

    def flush(partial: bool):
        emit_convergence_csv(records, out / "convergence.csv")
        if partial:
            summary["aborted"] = True
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")

    if config.runs_model_based():
        n, m = model.state_dim, model.input_dim
        try:
            trace = policy_iteration(model, cost, np.zeros((m, n)),
                                     tol=config.pi_tol, max_iter=config.pi_max_iter)
        except SolverFailure as exc:
            flush(partial=True)
            raise type(exc)(f"method model_based: {exc}") from exc
        records.extend(_records_from_pi(trace, model, cost, gain_ref, lam_ref))
        summary["model_based"] = {
            "converged": trace.converged,
            "iterations": trace.iterations,
            "P": trace.kernels[-1].tolist(),
            "L": trace.gains[-1].tolist(),
            "lambda": trace.costs[-1],
            "gain_error": float(np.linalg.norm(trace.gains[-1] - gain_ref)),
        }

    if config.runs_model_free():
        learner = config.learner
        admissible, rho = is_admissible(model, learner.initial_gain)
        if not admissible:
            flush(partial=True)
            raise NotAdmissibleError(
                f"method model_free: initial gain is not admissible "
                f"(moment spectral radius {rho:.6f})",
                spectral_radius=rho,
            )
        per_seed: dict = {}
        for seed in config.seeds:
            try:
                result = run_online_learning(model, cost,
                                             replace(learner, seed=seed))
            except SolverFailure as exc:
                flush(partial=True)
                raise type(exc)(f"method model_free, seed {seed}: {exc}") from exc
            records.extend(_records_from_learning(result, seed, gain_ref, lam_ref))
            per_seed[str(seed)] = {
                "converged": result.converged,
                "iterations": result.iterations,
                "L": result.gains[-1].tolist(),
                "lambda": result.cost_estimates[-1],
                "gain_error": float(np.linalg.norm(result.gains[-1] - gain_ref)),
                "rel_cost_error": abs(result.cost_estimates[-1] - lam_ref) / abs(lam_ref),
                "skipped_updates": int(sum(result.skipped_updates)),
            }
        summary["model_free"] = {
            "cost_mode": learner.cost_mode,
            "seeds": per_seed,
        }

    flush(partial=False)
    return summary
