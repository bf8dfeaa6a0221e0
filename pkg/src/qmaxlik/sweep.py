"""Convergence sweeps: iterations to reach a reference solution as a function of eps.

Protocol: solve the dataset once to high accuracy (line-search steps, 1e-10
element tolerance), then rerun the diluted iteration from scratch for each eps
and count steps until every matrix element is within the requested tolerance
of the reference. eps = inf rows use the plain quadratic update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .engine import (
    CYCLE_ATOL,
    DEFAULT_PROBABILITY_FLOOR,
    LineSearchEpsilon,
    ReconstructionConfig,
    ReconstructionResult,
    Termination,
    _apply_map,
    _r_from_probs,
    _traces,
    outcome_probabilities,
    reconstruct,
)
from .errors import ValidationError

REFERENCE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SweepRow:
    epsilon: float  # math.inf for the plain quadratic update
    tolerance: float
    iterations: int
    converged: bool


def reference_solution(
    dataset: Dataset,
    max_iterations: int = 20000,
    floor: float = DEFAULT_PROBABILITY_FLOOR,
) -> ReconstructionResult:
    """High-accuracy solve used as the comparison point of a sweep."""
    config = ReconstructionConfig(
        strategy=LineSearchEpsilon(),
        tol_residual=REFERENCE_TOLERANCE,
        tol_element=REFERENCE_TOLERANCE,
        tol_loglik=1e-14,
        max_iterations=max_iterations,
        probability_floor=floor,
    )
    result = reconstruct(dataset, config)
    if result.termination in (Termination.MAX_ITERATIONS, Termination.CYCLE_DETECTED):
        raise ValidationError(
            f"reference solve did not converge ({result.termination.value}, "
            f"residual {result.final_residual:.3e})"
        )
    return result


def sweep_iteration_counts(
    dataset: Dataset,
    reference: np.ndarray,
    epsilons,
    tolerances,
    max_iterations: int = 20000,
    floor: float = DEFAULT_PROBABILITY_FLOOR,
) -> list[SweepRow]:
    """Iterations until max |rho - reference| falls below each tolerance, per eps.

    One trajectory is run per eps (the iteration is deterministic, so every
    tolerance reads its first-crossing step off the same trajectory). Rows are
    ordered by (tolerance, eps) with eps = inf last; a trajectory that cycles
    or runs out of iterations before crossing gets converged = False.
    """
    eps_list = [float(e) for e in epsilons]
    tol_list = sorted(float(t) for t in tolerances)
    if not eps_list or not tol_list:
        raise ValidationError("need at least one eps and one tolerance")
    if min(tol_list) <= 0 or any(e <= 0 for e in eps_list):
        raise ValidationError("eps values and tolerances must be positive")

    crossings: dict[tuple[float, float], int | None] = {}
    for eps in eps_list:
        remaining = list(tol_list)  # ascending: loosest at the end, popped first
        rho = np.eye(dataset.dim, dtype=np.complex128) / dataset.dim
        probs = outcome_probabilities(rho, dataset, floor)
        previous = None
        for iteration in range(1, max_iterations + 1):
            r = _r_from_probs(dataset, probs)
            candidate = _apply_map(rho, r, eps)
            probs = np.maximum(_traces(dataset, candidate), floor)
            distance = float(np.max(np.abs(candidate - reference)))
            while remaining and distance < remaining[-1]:
                crossings[(eps, remaining.pop())] = iteration
            if not remaining:
                break
            if (
                previous is not None
                and float(np.max(np.abs(candidate - previous))) <= CYCLE_ATOL
                and float(np.max(np.abs(candidate - rho))) > CYCLE_ATOL
            ):
                break  # period-two cycle; no further progress possible
            previous = rho
            rho = candidate
        for tol in remaining:
            crossings[(eps, tol)] = None

    rows = []
    for tol in tol_list:
        for eps in sorted(eps_list):
            count = crossings[(eps, tol)]
            rows.append(
                SweepRow(
                    epsilon=eps,
                    tolerance=tol,
                    iterations=count if count is not None else max_iterations,
                    converged=count is not None,
                )
            )
    return rows


def run_sweep(
    dataset: Dataset,
    epsilons,
    tolerances,
    max_iterations: int = 20000,
    floor: float = DEFAULT_PROBABILITY_FLOOR,
    reference: np.ndarray | None = None,
) -> tuple[list[SweepRow], np.ndarray]:
    """Full sweep: compute (or reuse) the reference solution, then count iterations."""
    if reference is None:
        reference = reference_solution(dataset, max_iterations=max_iterations, floor=floor).estimate
    rows = sweep_iteration_counts(
        dataset, reference, epsilons, tolerances, max_iterations=max_iterations, floor=floor
    )
    return rows, reference
