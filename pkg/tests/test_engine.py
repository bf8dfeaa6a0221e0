import math

import numpy as np
import pytest

from qmaxlik import (
    AdaptiveBackoff,
    Dataset,
    FixedEpsilon,
    GOperator,
    InfiniteRhoR,
    LineSearchEpsilon,
    RandomEpsilon,
    ReconstructionConfig,
    Termination,
    ValidationError,
    choose_epsilon_line_search,
    counterexample_dataset,
    diluted_step,
    extremal_residual,
    g_corrected_step,
    likelihood_gain_first_order,
    log_likelihood,
    outcome_probabilities,
    r_operator,
    reconstruct,
    rhor_step,
)
from support import random_dataset, random_density, random_instance

UNIFORM = np.eye(2, dtype=complex) / 2
MLE = np.diag([1 / 3, 2 / 3]).astype(complex)
STEP1 = np.diag([1 / 5, 4 / 5]).astype(complex)

# log-likelihoods of the three-count qubit record, from the definition directly
LOGLIK_UNIFORM = 3 * math.log(1 / 2)
LOGLIK_MLE = math.log(1 / 3) + 2 * math.log(2 / 3)
LOGLIK_STEP1 = math.log(1 / 5) + 2 * math.log(4 / 5)


@pytest.fixture
def qubit_record():
    return counterexample_dataset()


class TestOutcomeProbabilities:
    def test_uniform_state(self, qubit_record):
        np.testing.assert_allclose(outcome_probabilities(UNIFORM, qubit_record), [0.5, 0.5])

    def test_first_iterate(self, qubit_record):
        np.testing.assert_allclose(outcome_probabilities(STEP1, qubit_record), [0.2, 0.8])

    def test_zero_overlap_clamped(self, qubit_record):
        pure = np.diag([1.0, 0.0]).astype(complex)
        probs = outcome_probabilities(pure, qubit_record, floor=1e-12)
        assert probs[1] == 1e-12

    def test_dimension_mismatch(self, qubit_record):
        with pytest.raises(ValidationError):
            outcome_probabilities(np.eye(3) / 3, qubit_record)


class TestLogLikelihood:
    def test_uniform(self, qubit_record):
        assert log_likelihood(UNIFORM, qubit_record) == pytest.approx(LOGLIK_UNIFORM, abs=1e-14)

    def test_maximum(self, qubit_record):
        assert log_likelihood(MLE, qubit_record) == pytest.approx(LOGLIK_MLE, abs=1e-14)

    def test_overshoot_state(self, qubit_record):
        assert log_likelihood(STEP1, qubit_record) == pytest.approx(LOGLIK_STEP1, abs=1e-14)

    def test_mle_maximizes_over_diagonal_grid(self, qubit_record):
        # brute-force oracle: L(p) = log p + 2 log(1-p) peaks at p = 1/3
        ps = np.linspace(0.01, 0.99, 981)
        values = [log_likelihood(np.diag([p, 1 - p]), qubit_record) for p in ps]
        assert abs(ps[int(np.argmax(values))] - 1 / 3) < 2e-3
        assert max(values) <= LOGLIK_MLE + 1e-12


class TestROperator:
    def test_at_uniform(self, qubit_record):
        np.testing.assert_allclose(r_operator(UNIFORM, qubit_record), np.diag([2 / 3, 4 / 3]), atol=1e-14)

    def test_at_first_iterate(self, qubit_record):
        np.testing.assert_allclose(r_operator(STEP1, qubit_record), np.diag([5 / 3, 5 / 6]), atol=1e-14)

    def test_identity_when_frequencies_match(self):
        d = Dataset(
            elements=np.stack([np.diag([1.0, 0j]), np.diag([0j, 1.0])]),
            counts=np.array([1.0, 1.0]),
        )
        np.testing.assert_allclose(r_operator(UNIFORM, d), np.eye(2), atol=1e-14)


class TestSteps:
    def test_rhor_two_cycle(self, qubit_record):
        first = rhor_step(UNIFORM, qubit_record)
        np.testing.assert_allclose(first, STEP1, atol=1e-12)
        second = rhor_step(first, qubit_record)
        np.testing.assert_allclose(second, UNIFORM, atol=1e-12)

    def test_rhor_fixed_point(self, qubit_record):
        np.testing.assert_allclose(rhor_step(MLE, qubit_record), MLE, atol=1e-12)

    def test_diluted_identity_limit(self, qubit_record):
        out = diluted_step(UNIFORM, qubit_record, 1e-12)
        assert np.max(np.abs(out - UNIFORM)) <= 1e-10

    def test_diluted_unit_eps(self, qubit_record):
        out = diluted_step(UNIFORM, qubit_record, 1.0)
        np.testing.assert_allclose(out, np.diag([25 / 74, 49 / 74]), atol=1e-14)

    def test_diluted_fixed_point(self, qubit_record):
        for eps in (1e-3, 1.0, 1e3):
            assert np.max(np.abs(diluted_step(MLE, qubit_record, eps) - MLE)) <= 1e-12

    def test_diluted_rejects_nonpositive_eps(self, qubit_record):
        with pytest.raises(ValidationError):
            diluted_step(UNIFORM, qubit_record, 0.0)


class TestExtremalResidual:
    def test_zero_at_maximum(self, qubit_record):
        assert extremal_residual(MLE, qubit_record) <= 1e-12

    def test_at_uniform(self, qubit_record):
        assert extremal_residual(UNIFORM, qubit_record) == pytest.approx(math.sqrt(2) / 6, abs=1e-12)

    def test_zero_when_frequencies_match(self):
        rng = np.random.default_rng(9)
        rho = random_density(rng, 3)
        povm = np.stack([np.diag(row).astype(complex) for row in np.eye(3)])
        counts = outcome_probabilities(rho, Dataset(elements=povm, counts=np.ones(3)))
        d = Dataset(elements=povm, counts=counts * 100)
        diag = np.diag(np.diag(rho))  # same outcome probabilities, R = identity
        assert extremal_residual(diag, d) <= 1e-12


class TestFirstOrderGain:
    def test_zero_at_maximum(self, qubit_record):
        assert abs(likelihood_gain_first_order(MLE, qubit_record, 0.3)) <= 1e-12

    def test_uniform_value(self, qubit_record):
        # tr(R rho R) = (2/3)^2/2 + (4/3)^2/2 = 10/9
        gain = likelihood_gain_first_order(UNIFORM, qubit_record, 0.01)
        assert gain == pytest.approx(0.02 * (10 / 9 - 1), abs=1e-15)

    def test_zero_at_zero_eps(self, qubit_record):
        assert likelihood_gain_first_order(UNIFORM, qubit_record, 0.0) == 0.0


class TestGCorrectedStep:
    def test_identity_g_matches_diluted(self, qubit_record):
        g = GOperator.from_dataset(qubit_record)
        for eps in (0.3, 1.0, 7.0, math.inf):
            corrected = g_corrected_step(UNIFORM, qubit_record, g, eps)
            plain = diluted_step(UNIFORM, qubit_record, eps) if math.isfinite(eps) else rhor_step(UNIFORM, qubit_record)
            np.testing.assert_allclose(corrected, plain, atol=1e-15)

    def test_debiased_fixed_point_every_eps(self, incomplete_record):
        d, g = incomplete_record
        for eps in (0.01, 1.0, 100.0, math.inf):
            out = g_corrected_step(MLE, d, g, eps)
            assert np.max(np.abs(out - MLE)) <= 1e-12

    def test_uncorrected_map_has_other_fixed_point(self, incomplete_record):
        d, _ = incomplete_record
        # brute-force fixed-point search over diagonal qubit states
        ps = np.linspace(0.02, 0.98, 4801)
        gaps = []
        for p in ps:
            rho = np.diag([p, 1 - p]).astype(complex)
            gaps.append(np.max(np.abs(diluted_step(rho, d, 1.0) - rho)))
        fixed = ps[int(np.argmin(gaps))]
        assert abs(fixed - 0.5) < 1e-3  # not the debiased state 1/3
        assert abs(fixed - 1 / 3) > 0.1

    def test_corrected_map_fixed_point_search(self, incomplete_record):
        d, g = incomplete_record
        ps = np.linspace(0.02, 0.98, 4801)
        gaps = []
        for p in ps:
            rho = np.diag([p, 1 - p]).astype(complex)
            gaps.append(np.max(np.abs(g_corrected_step(rho, d, g, math.inf) - rho)))
        fixed = ps[int(np.argmin(gaps))]
        assert abs(fixed - 1 / 3) < 1e-3


@pytest.fixture
def incomplete_record():
    """POVM {|0><0|, |1><1|/2} with the exact expected counts of diag(1/3, 2/3)."""
    elements = np.stack([np.diag([1.0, 0j]), np.diag([0j, 0.5])])
    d = Dataset(elements=elements, counts=np.array([1.0, 1.0]))
    return d, GOperator.from_dataset(d)


class TestLineSearch:
    def test_positive_gain_off_maximum(self, qubit_record):
        _, gain = choose_epsilon_line_search(UNIFORM, qubit_record)
        assert gain > 0

    def test_zero_gain_at_maximum(self, qubit_record):
        _, gain = choose_epsilon_line_search(MLE, qubit_record)
        assert gain <= 1e-12

    def test_eps_within_grid(self, qubit_record):
        params = LineSearchEpsilon(grid_lo=1e-3, grid_hi=1e3, grid_points=25)
        eps, _ = choose_epsilon_line_search(UNIFORM, qubit_record, params)
        assert 1e-3 <= eps <= 1e3

    def test_gain_matches_actual_step(self, qubit_record):
        eps, gain = choose_epsilon_line_search(UNIFORM, qubit_record)
        stepped = diluted_step(UNIFORM, qubit_record, eps)
        actual = log_likelihood(stepped, qubit_record) - log_likelihood(UNIFORM, qubit_record)
        assert gain == pytest.approx(actual, abs=1e-12)


class TestReconstruct:
    def test_rhor_detects_cycle(self, qubit_record):
        res = reconstruct(qubit_record, ReconstructionConfig(strategy=InfiniteRhoR(), max_iterations=100))
        assert res.termination is Termination.CYCLE_DETECTED
        trace = res.log_likelihood_trace
        assert trace[2] < trace[1]  # the second step decreases the likelihood

    def test_fixed_eps_one_converges(self, qubit_record):
        res = reconstruct(qubit_record, ReconstructionConfig(strategy=FixedEpsilon(1.0)))
        assert np.max(np.abs(res.estimate - MLE)) <= 1e-8
        assert np.min(np.diff(res.log_likelihood_trace)) >= -1e-12

    def test_fixed_eps25_monotone_eps30_not(self, qubit_record):
        config = lambda e: ReconstructionConfig(
            strategy=FixedEpsilon(e), max_iterations=2000, tol_element=1e-13, tol_loglik=1e-16
        )
        res25 = reconstruct(qubit_record, config(25.0))
        assert np.min(np.diff(res25.log_likelihood_trace)) >= -1e-12
        res30 = reconstruct(qubit_record, config(30.0))
        assert np.min(np.diff(res30.log_likelihood_trace)) < -1e-6

    def test_adaptive_backoff_converges_monotonically(self, qubit_record):
        res = reconstruct(qubit_record, ReconstructionConfig(strategy=AdaptiveBackoff()))
        assert np.max(np.abs(res.estimate - MLE)) <= 1e-7
        assert np.min(np.diff(res.log_likelihood_trace)) >= 0
        assert math.isinf(res.epsilon_trace[0])  # first quadratic step is accepted

    def test_random_strategy_converges_monotonically(self, qubit_record):
        res = reconstruct(qubit_record, ReconstructionConfig(strategy=RandomEpsilon(epsilon_max=10.0, seed=3)))
        assert np.max(np.abs(res.estimate - MLE)) <= 1e-5
        assert np.min(np.diff(res.log_likelihood_trace)) >= 0

    def test_line_search_converges(self, qubit_record):
        res = reconstruct(qubit_record, ReconstructionConfig(strategy=LineSearchEpsilon()))
        assert np.max(np.abs(res.estimate - MLE)) <= 1e-8
        assert np.min(np.diff(res.log_likelihood_trace)) >= -1e-12

    def test_deterministic_given_config(self, qubit_record):
        cfg = ReconstructionConfig(strategy=RandomEpsilon(epsilon_max=5.0, seed=42))
        a = reconstruct(qubit_record, cfg)
        b = reconstruct(qubit_record, cfg)
        np.testing.assert_array_equal(a.estimate, b.estimate)
        np.testing.assert_array_equal(a.epsilon_trace, b.epsilon_trace)

    def test_g_corrected_recovers_debiased_state(self, incomplete_record):
        d, _ = incomplete_record
        res = reconstruct(
            d,
            ReconstructionConfig(strategy=FixedEpsilon(1.0), g_correction=True, tol_element=1e-12, tol_residual=1e-11),
        )
        assert np.max(np.abs(res.estimate - MLE)) <= 1e-6

    def test_uncorrected_biased_on_incomplete_record(self, incomplete_record):
        d, _ = incomplete_record
        res = reconstruct(d, ReconstructionConfig(strategy=FixedEpsilon(1.0)))
        assert np.max(np.abs(res.estimate - MLE)) > 1e-3

    def test_g_corrected_line_search(self, incomplete_record):
        d, _ = incomplete_record
        res = reconstruct(
            d,
            ReconstructionConfig(strategy=LineSearchEpsilon(), g_correction=True, tol_element=1e-12, tol_residual=1e-11),
        )
        assert np.max(np.abs(res.estimate - MLE)) <= 1e-7

    def test_trace_recomputed_from_definition(self, qubit_record):
        res = reconstruct(qubit_record, ReconstructionConfig(strategy=FixedEpsilon(1.0)))
        # spot-check the reported trace against an independent evaluation
        assert res.log_likelihood_trace[0] == pytest.approx(LOGLIK_UNIFORM, abs=1e-14)
        assert res.log_likelihood_trace[-1] == pytest.approx(
            log_likelihood(res.estimate, qubit_record), abs=1e-13
        )

    def test_residual_met_on_random_dataset(self):
        rng = np.random.default_rng(12)
        d = random_dataset(rng, 4)
        res = reconstruct(d, ReconstructionConfig(strategy=LineSearchEpsilon(), tol_residual=1e-7))
        assert res.termination in (
            Termination.RESIDUAL_MET,
            Termination.ELEMENT_CHANGE_MET,
            Termination.LIKELIHOOD_STALLED,
        )
        assert res.final_residual <= 1e-6

    def test_fixed_point_characterization_at_residual_met(self):
        # tr(R rho R) = 1 within 10x residual tolerance once the residual is met
        rng = np.random.default_rng(13)
        tol = 1e-7
        hits = 0
        for _ in range(5):
            rho0, d = random_instance(rng, dim=3)
            res = reconstruct(d, ReconstructionConfig(strategy=LineSearchEpsilon(), tol_residual=tol, max_iterations=3000))
            if res.termination is not Termination.RESIDUAL_MET:
                continue
            hits += 1
            r = r_operator(res.estimate, d)
            assert abs((r @ res.estimate @ r).trace().real - 1.0) <= 10 * tol
        assert hits >= 1
