"""Likelihood functional, fixed-point updates, step-size strategies, and the reconstruction loop.

The estimate is driven by the state-dependent operator

    R(rho) = (1/N) sum_j (f_j / pr_j) Pi_j,      pr_j = tr(Pi_j rho),

whose fixed point R rho = rho characterizes the maximum-likelihood state.
The quadratic update rho <- N[R rho R] is fast but can overshoot (it cycles
with period two on some records); blending R with the identity,

    rho <- N[ M rho M ],   M = (1 + eps R) / (1 + eps),

trades speed for a guaranteed likelihood increase at small eps and recovers
the quadratic update as eps -> infinity. Several strategies for picking eps
per step are provided; all of them report the exact log-likelihood trace.

For datasets whose elements do not sum to the identity, the update is debiased
with G = sum_j Pi_j by blending G^-1 R instead of R; the corresponding
objective is the likelihood renormalized by tr(G rho).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .dataset import Dataset, GOperator
from .errors import ValidationError
from .operators import hermitize, normalize

DEFAULT_PROBABILITY_FLOOR = 1e-12
CYCLE_ATOL = 1e-10

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ---------------------------------------------------------------------------
# step-size strategies


@dataclass(frozen=True)
class InfiniteRhoR:
    """Plain quadratic update every step; fastest, but monotonicity is not guaranteed."""


@dataclass(frozen=True)
class FixedEpsilon:
    """Diluted update with the same eps at every step."""

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")


@dataclass(frozen=True)
class AdaptiveBackoff:
    """Try the quadratic update first; on a likelihood non-increase retry with
    eps = epsilon0, epsilon0*shrink, ... until some step raises the likelihood."""

    epsilon0: float = 1.0
    shrink: float = 0.5
    max_retries: int = 60

    def __post_init__(self):
        if not self.epsilon0 > 0:
            raise ValidationError("epsilon0 must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValidationError("shrink factor must lie strictly in (0, 1)")
        if self.max_retries < 1:
            raise ValidationError("max_retries must be at least 1")


@dataclass(frozen=True)
class LineSearchEpsilon:
    """Maximize the actual likelihood gain over eps at every step.

    A logarithmic grid scan over [grid_lo, grid_hi] followed by golden-section
    refinement around the best grid point.
    """

    grid_lo: float = 1e-3
    grid_hi: float = 1e3
    grid_points: int = 25
    refinements: int = 20

    def __post_init__(self):
        if not 0 < self.grid_lo < self.grid_hi:
            raise ValidationError("need 0 < grid_lo < grid_hi")
        if self.grid_points < 2 or self.refinements < 0:
            raise ValidationError("grid_points must be >= 2 and refinements >= 0")


@dataclass(frozen=True)
class RandomEpsilon:
    """Draw eps log-uniformly from (1e-4, epsilon_max], redrawing until the
    likelihood increases (up to max_retries attempts per step)."""

    epsilon_max: float = 10.0
    max_retries: int = 60
    seed: int = 0

    def __post_init__(self):
        if not self.epsilon_max > 1e-4:
            raise ValidationError("epsilon_max must exceed the 1e-4 lower sampling bound")
        if self.max_retries < 1:
            raise ValidationError("max_retries must be at least 1")


EpsilonStrategy = Union[InfiniteRhoR, FixedEpsilon, AdaptiveBackoff, LineSearchEpsilon, RandomEpsilon]


class Termination(enum.Enum):
    RESIDUAL_MET = "residual_met"
    ELEMENT_CHANGE_MET = "element_change_met"
    LIKELIHOOD_STALLED = "likelihood_stalled"
    MAX_ITERATIONS = "max_iterations"
    CYCLE_DETECTED = "cycle_detected"


@dataclass(frozen=True)
class ReconstructionConfig:
    strategy: EpsilonStrategy = field(default_factory=AdaptiveBackoff)
    tol_residual: float = 1e-8
    tol_element: float = 1e-10
    tol_loglik: float = 1e-13
    max_iterations: int = 5000
    g_correction: bool = False
    probability_floor: float = DEFAULT_PROBABILITY_FLOOR

    def __post_init__(self):
        if min(self.tol_residual, self.tol_element, self.tol_loglik) <= 0:
            raise ValidationError("stopping tolerances must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be at least 1")
        if not self.probability_floor > 0:
            raise ValidationError("probability floor must be positive")


@dataclass(frozen=True)
class ReconstructionResult:
    """Final estimate plus the per-iteration record of a reconstruction run.

    ``log_likelihood_trace[k]`` is the objective of iterate k (entry 0 is the
    initial state); with G-correction active the objective is the
    tr(G rho)-renormalized log-likelihood, otherwise the plain one.
    ``epsilon_trace[k]`` is the step size accepted at iteration k+1
    (math.inf marks a plain quadratic step).
    """

    estimate: np.ndarray
    log_likelihood_trace: np.ndarray
    epsilon_trace: np.ndarray
    final_residual: float
    iterations: int
    termination: Termination
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# elementary operations


def _check_dims(rho: np.ndarray, dataset: Dataset) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (dataset.dim, dataset.dim):
        raise ValidationError(f"state shape {rho.shape} does not match dataset dim {dataset.dim}")
    return rho


def _traces(dataset: Dataset, matrix: np.ndarray) -> np.ndarray:
    """tr(Pi_k matrix) for every element, as real numbers (matrix is Hermitian)."""
    vectors = dataset.vectors
    if vectors is not None:
        return np.einsum("ki,ij,kj->k", dataset.vectors_conj, matrix, vectors, optimize=True).real
    return np.einsum("kij,ji->k", dataset.elements, matrix).real


def outcome_probabilities(rho, dataset: Dataset, floor: float = DEFAULT_PROBABILITY_FLOOR) -> np.ndarray:
    """Per-outcome probabilities tr(Pi_j rho), floored away from zero."""
    rho = _check_dims(rho, dataset)
    return np.maximum(_traces(dataset, rho), floor)


def log_likelihood(rho, dataset: Dataset, floor: float = DEFAULT_PROBABILITY_FLOOR) -> float:
    """sum_j f_j log pr_j with floored probabilities."""
    pr = outcome_probabilities(rho, dataset, floor)
    return float(dataset.counts @ np.log(pr))


def r_operator(rho, dataset: Dataset, floor: float = DEFAULT_PROBABILITY_FLOOR) -> np.ndarray:
    """(1/N) sum_j (f_j / pr_j) Pi_j for the current state; Hermitian PSD."""
    rho = _check_dims(rho, dataset)
    return _r_from_probs(dataset, outcome_probabilities(rho, dataset, floor))


def _r_from_probs(dataset: Dataset, probs: np.ndarray) -> np.ndarray:
    weights = dataset.counts / (dataset.total * probs)
    vectors = dataset.vectors
    if vectors is not None:
        r = (vectors * weights[:, None]).T @ dataset.vectors_conj
    else:
        r = np.einsum("k,kij->ij", weights, dataset.elements)
    return hermitize(r)


def _apply_map(rho: np.ndarray, b: np.ndarray, eps: float) -> np.ndarray:
    """normalize(M rho M^dag) with M = (1 + eps*b)/(1 + eps), or M = b at eps = inf."""
    if math.isinf(eps):
        m = b
    else:
        m = (np.eye(b.shape[0]) + eps * b) / (1.0 + eps)
    return normalize(hermitize(m @ rho @ m.conj().T))


def rhor_step(rho, dataset: Dataset, floor: float = DEFAULT_PROBABILITY_FLOOR) -> np.ndarray:
    """One plain quadratic update: normalize(R rho R)."""
    rho = _check_dims(rho, dataset)
    return _apply_map(rho, r_operator(rho, dataset, floor), math.inf)


def diluted_step(rho, dataset: Dataset, eps: float, floor: float = DEFAULT_PROBABILITY_FLOOR) -> np.ndarray:
    """One diluted update with blending weight ``eps`` (eps = inf reproduces rhor_step)."""
    if not eps > 0:
        raise ValidationError("eps must be positive")
    rho = _check_dims(rho, dataset)
    return _apply_map(rho, r_operator(rho, dataset, floor), eps)


def g_corrected_step(
    rho,
    dataset: Dataset,
    g: GOperator,
    eps: float,
    floor: float = DEFAULT_PROBABILITY_FLOOR,
) -> np.ndarray:
    """One debiased update blending G^-1 R with the identity.

    normalize(M rho M^dag) with M = (1 + eps G^-1 R)/(1 + eps); at eps = inf
    this is normalize(G^-1 R rho R G^-1). The debiased maximum-likelihood
    state is a fixed point for every eps, and G = identity reduces the map to
    ``diluted_step`` exactly.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    rho = _check_dims(rho, dataset)
    b = g.inverse @ r_operator(rho, dataset, floor)
    return _apply_map(rho, b, eps)


def extremal_residual(rho, dataset: Dataset, floor: float = DEFAULT_PROBABILITY_FLOOR) -> float:
    """Frobenius norm of R rho - rho; zero exactly at the maximum-likelihood state."""
    rho = _check_dims(rho, dataset)
    r = r_operator(rho, dataset, floor)
    return float(np.linalg.norm(r @ rho - rho))


def _g_residual(rho: np.ndarray, r: np.ndarray, g: GOperator) -> float:
    """Frobenius norm of tr(G rho) G^-1 R rho - rho (debiased stationarity)."""
    tau = (g.matrix @ rho).trace().real
    return float(np.linalg.norm(tau * (g.inverse @ (r @ rho)) - rho))


def likelihood_gain_first_order(rho, dataset: Dataset, eps: float, floor: float = DEFAULT_PROBABILITY_FLOOR) -> float:
    """First-order likelihood gain 2*eps*(tr(R rho R) - 1) of a diluted step.

    Non-negative for every state by the Cauchy-Schwarz inequality, and zero
    exactly at the maximum-likelihood state. The value is the derivative of
    the per-measurement log-likelihood; for a record with total weight N the
    raw log-likelihood changes N times faster.
    """
    rho = _check_dims(rho, dataset)
    r = r_operator(rho, dataset, floor)
    return 2.0 * eps * float((r @ rho @ r).trace().real - 1.0)


# ---------------------------------------------------------------------------
# exact gain profile along the eps direction


class _GainProfile:
    """Exact likelihood gain of a diluted step as a cheap function of eps.

    The unnormalized candidate (1 + eps B) rho (1 + eps B^dag) is quadratic in
    eps, so every per-outcome trace is a quadratic polynomial; evaluating the
    gain at a new eps costs O(n_outcomes) instead of a fresh matrix sandwich.
    """

    def __init__(self, rho: np.ndarray, dataset: Dataset, floor: float, g: GOperator | None):
        self.dataset = dataset
        self.floor = floor
        probs = outcome_probabilities(rho, dataset, floor)
        r = _r_from_probs(dataset, probs)
        b = r if g is None else g.inverse @ r
        t1 = b @ rho + rho @ b.conj().T
        t2 = b @ rho @ b.conj().T
        self._p0 = _traces(dataset, rho)
        self._p1 = _traces(dataset, t1)
        self._p2 = _traces(dataset, t2)
        self._s = np.array([1.0, t1.trace().real, t2.trace().real])
        if g is None:
            self._gamma = None
            self._base = float(dataset.counts @ np.log(np.maximum(self._p0, floor)))
        else:
            self._gamma = np.array(
                [
                    (g.matrix @ rho).trace().real,
                    (g.matrix @ t1).trace().real,
                    (g.matrix @ t2).trace().real,
                ]
            )
            self._base = float(
                dataset.counts @ np.log(np.maximum(self._p0, floor))
                - dataset.total * math.log(self._gamma[0])
            )

    def __call__(self, eps: float) -> float:
        coeff = np.array([1.0, eps, eps * eps])
        scale = float(self._s @ coeff)
        pr = np.maximum((self._p0 + eps * self._p1 + eps * eps * self._p2) / scale, self.floor)
        value = float(self.dataset.counts @ np.log(pr))
        if self._gamma is not None:
            value -= self.dataset.total * math.log(float(self._gamma @ coeff) / scale)
        return value - self._base


def choose_epsilon_line_search(
    rho,
    dataset: Dataset,
    params: LineSearchEpsilon = LineSearchEpsilon(),
    floor: float = DEFAULT_PROBABILITY_FLOOR,
    g: GOperator | None = None,
) -> tuple[float, float]:
    """Step size maximizing the actual likelihood gain, and that gain.

    Scans a logarithmic grid over [grid_lo, grid_hi], then refines around the
    best grid point by golden section in log(eps). Away from the maximum the
    returned gain is positive; at the maximum it collapses to zero (up to
    roundoff), which callers treat as a stall.
    """
    rho = _check_dims(rho, dataset)
    gain = _GainProfile(rho, dataset, floor, g)
    return _maximize_gain(gain, params)


def _maximize_gain(gain, params: LineSearchEpsilon) -> tuple[float, float]:
    grid = np.geomspace(params.grid_lo, params.grid_hi, params.grid_points)
    values = [gain(float(e)) for e in grid]
    best = int(np.argmax(values))
    best_eps, best_gain = float(grid[best]), float(values[best])

    if params.refinements > 0:
        lo = math.log(grid[max(best - 1, 0)])
        hi = math.log(grid[min(best + 1, len(grid) - 1)])
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = gain(math.exp(x1)), gain(math.exp(x2))
        for _ in range(params.refinements):
            if f1 >= f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - _GOLDEN * (hi - lo)
                f1 = gain(math.exp(x1))
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + _GOLDEN * (hi - lo)
                f2 = gain(math.exp(x2))
            x, f = (x1, f1) if f1 >= f2 else (x2, f2)
            if f > best_gain:
                best_eps, best_gain = math.exp(x), f
    return best_eps, best_gain


# ---------------------------------------------------------------------------
# the reconstruction loop


def _objective_from_probs(probs: np.ndarray, candidate: np.ndarray, dataset: Dataset, g: GOperator | None) -> float:
    value = float(dataset.counts @ np.log(probs))
    if g is not None:
        value -= dataset.total * math.log((g.matrix @ candidate).trace().real)
    return value


def _objective(rho: np.ndarray, dataset: Dataset, floor: float, g: GOperator | None) -> float:
    return _objective_from_probs(outcome_probabilities(rho, dataset, floor), rho, dataset, g)


def reconstruct(dataset: Dataset, config: ReconstructionConfig = ReconstructionConfig()) -> ReconstructionResult:
    """Run the iterative reconstruction from the maximally mixed state.

    The initial state 1/dim gives every outcome a nonzero probability. Each
    iteration proposes a candidate according to the configured step-size
    strategy, records the exact objective value, and stops on the first of:
    stationarity residual below tol_residual, elementwise state change below
    tol_element, objective change below tol_loglik, a detected period-two
    cycle, or the iteration cap.
    """
    dim = dataset.dim
    floor = config.probability_floor
    g = GOperator.from_dataset(dataset) if config.g_correction else None
    strategy = config.strategy
    rng = np.random.default_rng(strategy.seed) if isinstance(strategy, RandomEpsilon) else None

    rho = np.eye(dim, dtype=np.complex128) / dim
    probs = outcome_probabilities(rho, dataset, floor)
    r = _r_from_probs(dataset, probs)
    objective = _objective_from_probs(probs, rho, dataset, g)

    loglik_trace = [objective]
    eps_trace: list[float] = []
    previous: np.ndarray | None = None  # iterate k-1, for cycle detection
    termination = Termination.MAX_ITERATIONS
    diagnostics: dict = {}
    residual = math.inf
    iterations = 0

    def evaluate(candidate: np.ndarray) -> tuple[np.ndarray, float]:
        cand_probs = np.maximum(_traces(dataset, candidate), floor)
        return cand_probs, _objective_from_probs(cand_probs, candidate, dataset, g)

    for iterations in range(1, config.max_iterations + 1):
        b = r if g is None else g.inverse @ r

        candidate: np.ndarray | None = None
        cand_probs = probs
        new_objective = math.nan
        eps_used = math.inf

        if isinstance(strategy, (InfiniteRhoR, FixedEpsilon)):
            eps_used = math.inf if isinstance(strategy, InfiniteRhoR) else strategy.epsilon
            candidate = _apply_map(rho, b, eps_used)
            cand_probs, new_objective = evaluate(candidate)
        elif isinstance(strategy, AdaptiveBackoff):
            trials = [math.inf] + [
                strategy.epsilon0 * strategy.shrink**k for k in range(strategy.max_retries)
            ]
            best_delta = -math.inf
            for eps in trials:
                trial = _apply_map(rho, b, eps)
                trial_probs, value = evaluate(trial)
                best_delta = max(best_delta, value - objective)
                if value > objective:
                    candidate, cand_probs, new_objective, eps_used = trial, trial_probs, value, eps
                    break
            if candidate is None:
                diagnostics = {
                    "reason": "no step-size trial increased the likelihood",
                    "trials": len(trials),
                    "best_delta": best_delta,
                    "smallest_epsilon": trials[-1],
                }
        elif isinstance(strategy, RandomEpsilon):
            best_delta = -math.inf
            for _ in range(strategy.max_retries):
                eps = math.exp(rng.uniform(math.log(1e-4), math.log(strategy.epsilon_max)))
                trial = _apply_map(rho, b, eps)
                trial_probs, value = evaluate(trial)
                best_delta = max(best_delta, value - objective)
                if value > objective:
                    candidate, cand_probs, new_objective, eps_used = trial, trial_probs, value, eps
                    break
            if candidate is None:
                diagnostics = {
                    "reason": "no random step size increased the likelihood",
                    "trials": strategy.max_retries,
                    "best_delta": best_delta,
                }
        elif isinstance(strategy, LineSearchEpsilon):
            eps_used, _ = choose_epsilon_line_search(rho, dataset, strategy, floor, g)
            candidate = _apply_map(rho, b, eps_used)
            cand_probs, new_objective = evaluate(candidate)
        else:
            raise ValidationError(f"unknown step-size strategy {strategy!r}")

        if candidate is None:
            termination = Termination.LIKELIHOOD_STALLED
            iterations -= 1
            break

        change = float(np.max(np.abs(candidate - rho)))
        delta = new_objective - objective
        new_r = _r_from_probs(dataset, cand_probs)
        if g is None:
            residual = float(np.linalg.norm(new_r @ candidate - candidate))
        else:
            residual = _g_residual(candidate, new_r, g)

        loglik_trace.append(new_objective)
        eps_trace.append(eps_used)

        if residual <= config.tol_residual:
            termination = Termination.RESIDUAL_MET
        elif change <= config.tol_element:
            termination = Termination.ELEMENT_CHANGE_MET
        elif abs(delta) <= config.tol_loglik:
            termination = Termination.LIKELIHOOD_STALLED
        elif (
            previous is not None
            and change > CYCLE_ATOL
            and float(np.max(np.abs(candidate - previous))) <= CYCLE_ATOL
        ):
            termination = Termination.CYCLE_DETECTED
            diagnostics = {"reason": "iterates repeat with period two", "cycle_gap": change}
        previous = rho
        rho, probs, r, objective = candidate, cand_probs, new_r, new_objective
        if termination is not Termination.MAX_ITERATIONS:
            break

    if math.isinf(residual):  # no step was ever accepted
        residual = (
            float(np.linalg.norm(r @ rho - rho)) if g is None else _g_residual(rho, r, g)
        )

    return ReconstructionResult(
        estimate=rho,
        log_likelihood_trace=np.asarray(loglik_trace),
        epsilon_trace=np.asarray(eps_trace),
        final_residual=residual,
        iterations=iterations,
        termination=termination,
        diagnostics=diagnostics,
    )
