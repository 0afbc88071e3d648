#!/usr/bin/env python3
"""Test cases for models.py: families, quadrature, kernels and hypothesis checks."""

# Standard Library Imports
import math

# Local application/library imports
from errors import (
    ConfigurationError,
    DivergenceError,
    EvaluationError,
    PreconditionError,
)
from models import (
    AR1Kernel,
    DriftMethod,
    IIDKernel,
    LyapunovFunction,
    MetropolisKernel,
    UnnormalizedTarget,
    build_lyapunov,
    build_proposal,
    build_target,
    cauchy_target,
    check_envelope,
    check_log_concavity,
    check_normalization,
    check_symmetry,
    comparison_target,
    default_check_grid,
    expectation_under_proposal,
    exp_abs,
    laplace_proposal,
    laplace_target,
    normal_proposal,
    one_plus_square,
    stationary_moment,
    verify_drift,
)
from samplers import make_rng

# Third-party imports
import numpy as np
import pytest


@pytest.fixture
def target():
    """The h(x) = exp(-(x-1)^2) comparison target."""
    return comparison_target()


@pytest.fixture
def proposal():
    """Standard normal proposal."""
    return normal_proposal()


# -------------- Families and configuration --------------
def test_comparison_target_shape(target):
    """Test the comparison target's mode and tail parameters."""
    assert float(target.log_h(1.0)) == 0.0
    assert float(target.log_h(0.0)) == pytest.approx(-1.0)
    assert target.tail_decay_alpha == 1.0
    assert target.tail_threshold_x1 == 2.0
    assert target.true_mean == 1.0


def test_checked_log_h_rejects_non_finite():
    """Test that a non-finite log-density is reported with its point."""
    bad = UnnormalizedTarget(log_h=lambda x: np.log(np.asarray(x) - 5.0), name="bad")
    with pytest.raises(EvaluationError, match="bad"):
        bad.checked_log_h(0.0)


def test_lyapunov_validation():
    """Test Lyapunov family and parameter validation."""
    with pytest.raises(ConfigurationError):
        LyapunovFunction("cubic")
    with pytest.raises(PreconditionError):
        exp_abs(0.0)
    assert exp_abs(0.4).describe() == "exp(0.4|x|)"
    assert one_plus_square().describe() == "1+x^2"


def test_lyapunov_values_and_sublevels():
    """Test V, V^2 and the sublevel half-widths."""
    V = exp_abs(0.4)
    assert float(V.eval(-2.0)) == pytest.approx(math.exp(0.8))
    assert float(V.eval_sq(2.0)) == pytest.approx(math.exp(1.6))
    assert V.sublevel_half_width(math.exp(0.8)) == pytest.approx(2.0)
    assert one_plus_square().sublevel_half_width(5.0) == pytest.approx(2.0)
    with pytest.raises(PreconditionError):
        one_plus_square().sublevel_half_width(0.5)


def test_build_from_config():
    """Test the configuration builders and their field-named errors."""
    target = build_target({"family": "laplace", "scale": 2.0, "true_mean": 0.0})
    assert float(target.log_h(2.0)) == pytest.approx(-1.0)
    assert build_proposal({"family": "laplace"}).decay_alpha == 1.0
    assert build_lyapunov({"family": "one_plus_square"}).family == "one_plus_square"

    with pytest.raises(ConfigurationError, match="model.target.family"):
        build_target({"family": "beta"})
    with pytest.raises(ConfigurationError, match="model.lyapunov.s"):
        build_lyapunov({"family": "exp_abs"})
    with pytest.raises(ConfigurationError, match="model.target.center"):
        build_target({"family": "gaussian", "center": "one"})
    with pytest.raises(PreconditionError, match="tail_decay_alpha"):
        build_target({"family": "gaussian", "tail_decay_alpha": -1.0})


def test_true_mean_override():
    """Test that a configured true mean replaces the family default."""
    target = build_target({"family": "cauchy", "true_mean": 0.0})
    assert target.true_mean == 0.0
    assert cauchy_target().true_mean is None


# -------------- Proposal checks --------------
@pytest.mark.parametrize("proposal_factory", [normal_proposal, laplace_proposal])
def test_proposal_checks_pass(proposal_factory):
    """Test symmetry, normalization and envelope of the shipped proposals."""
    proposal = proposal_factory()
    assert check_symmetry(proposal).passed
    assert check_normalization(proposal).passed
    assert check_envelope(proposal).passed


def test_envelope_check_detects_violation(proposal):
    """Test that a too-small envelope constant is flagged."""
    squeezed = proposal.__class__(
        log_q=proposal.log_q,
        sampler=proposal.sampler,
        envelope_C=0.1,
        decay_alpha=proposal.decay_alpha,
    )
    report = check_envelope(squeezed)
    assert not report.passed
    assert report.max_deviation > 0


# -------------- Quadrature --------------
def test_expectation_under_proposal_moments(proposal):
    """Test Gaussian moments by quadrature."""
    assert expectation_under_proposal(proposal, lambda z: z * z) == pytest.approx(
        1.0, abs=1e-9
    )
    assert expectation_under_proposal(proposal, lambda z: z) == pytest.approx(
        0.0, abs=1e-10
    )
    # E exp(0.4|Z|) = 2 exp(0.08) Phi(0.4)
    expected = 2.0 * math.exp(0.08) * 0.6554217416103242
    assert expectation_under_proposal(
        proposal, lambda z: math.exp(0.4 * abs(z))
    ) == pytest.approx(expected, rel=1e-9)


def test_expectation_under_proposal_diverges():
    """Test that a non-integrable moment raises DivergenceError."""
    with pytest.raises(DivergenceError):
        expectation_under_proposal(laplace_proposal(), lambda z: np.exp(1.5 * abs(z)))


def test_stationary_moment(target):
    """Test mean and second moment of N(1, 1/2) from the unnormalized target."""
    assert stationary_moment(target, lambda x: x) == pytest.approx(1.0, abs=1e-8)
    assert stationary_moment(target, lambda x: x * x) == pytest.approx(1.5, abs=1e-8)


# -------------- Kernels --------------
def test_ar1_closed_form_matches_quadrature():
    """Test the folded-normal PV against quadrature."""
    kernel = AR1Kernel()
    V = exp_abs(0.4)
    for x in (-3.0, 0.0, 1.0, 4.0):
        closed = float(kernel.closed_form_pv(x, V))
        assert closed == pytest.approx(kernel.expect(x, V.eval), rel=1e-8)


def test_ar1_pv_sq_closed_form():
    """Test P(V^2) for V = 1 + x^2 at the origin and for the iid kernel."""
    V = one_plus_square()
    assert float(AR1Kernel().closed_form_pv_sq(0.0, V)) == pytest.approx(4.1875)
    assert float(IIDKernel().closed_form_pv_sq(3.0, V)) == pytest.approx(6.0)
    assert float(AR1Kernel().closed_form_pv_sq(2.0, V)) == pytest.approx(
        AR1Kernel().expect(2.0, V.eval_sq), rel=1e-8
    )


def test_metropolis_kernel_preserves_constants(target, proposal):
    """Test that the Metropolis expectation of a constant is that constant."""
    kernel = MetropolisKernel(target, proposal)
    assert kernel.expect(0.5, lambda y: 1.0) == pytest.approx(1.0, abs=1e-9)


def test_metropolis_kernel_sample_moves_or_stays(target, proposal):
    """Test that samples are either the current point or accepted moves."""
    kernel = MetropolisKernel(target, proposal)
    draws = kernel.sample(1.0, make_rng(3), 1000)
    assert draws.shape == (1000,)
    assert np.any(draws == 1.0)
    assert np.any(draws != 1.0)


# -------------- Drift verification --------------
@pytest.mark.parametrize("method", [DriftMethod.CLOSED_FORM, DriftMethod.QUADRATURE])
def test_verify_drift_ar1_is_tight(method):
    """Test PV = 0.25 V + 1.5 for the AR(1) chain with V = 1 + x^2."""
    report = verify_drift(
        AR1Kernel(), one_plus_square(), 0.25, 1.5, np.linspace(-5, 5, 11), method
    )
    assert report.passed
    assert abs(report.max_violation) < 1e-8


def test_verify_drift_detects_violation():
    """Test that an iid kernel violates beta=0.25, b=1.5 at the origin."""
    report = verify_drift(
        IIDKernel(), one_plus_square(), 0.25, 1.5, [-1.0, 0.0, 1.0],
        DriftMethod.CLOSED_FORM,
    )
    assert not report.passed
    assert report.max_violation == pytest.approx(0.25)
    assert report.worst_point == 0.0


def test_verify_drift_monte_carlo():
    """Test the Monte-Carlo drift check with three standard errors of slack."""
    report = verify_drift(
        IIDKernel(), one_plus_square(), 0.5, 2.0, [0.0, 2.0],
        DriftMethod.MONTE_CARLO, rng=make_rng(11), mc_draws=20_000,
    )
    assert report.passed
    assert len(report.standard_errors) == 2
    with pytest.raises(ConfigurationError):
        verify_drift(
            IIDKernel(), one_plus_square(), 0.5, 2.0, [0.0], DriftMethod.MONTE_CARLO
        )


@pytest.mark.parametrize("kernel", [AR1Kernel(), IIDKernel()], ids=["ar1", "iid"])
def test_verify_drift_monte_carlo_agrees_with_quadrature(kernel):
    """Test that MC and quadrature violations agree point by point."""
    V = one_plus_square()
    rng = make_rng(17)
    for x in (-2.0, 0.0, 3.0):
        quad = verify_drift(kernel, V, 0.5, 2.0, [x], DriftMethod.QUADRATURE)
        mc = verify_drift(
            kernel, V, 0.5, 2.0, [x], DriftMethod.MONTE_CARLO, rng=rng
        )
        assert quad.passed
        assert mc.passed
        gap = abs(mc.max_violation - quad.max_violation)
        assert gap <= 4.0 * mc.standard_errors[0]


def test_verify_drift_preconditions():
    """Test drift constant preconditions."""
    with pytest.raises(PreconditionError):
        verify_drift(AR1Kernel(), one_plus_square(), 1.0, 1.5, [0.0])
    with pytest.raises(PreconditionError):
        verify_drift(AR1Kernel(), one_plus_square(), 0.5, 0.0, [0.0])
    with pytest.raises(ConfigurationError):
        verify_drift(AR1Kernel(), one_plus_square(), 0.5, 1.0, [])


# -------------- Tail log-concavity --------------
def test_log_concavity_gaussian_target_passes(target):
    """Test the comparison target on a grid beyond x1."""
    report = check_log_concavity(target, default_check_grid(2.0))
    assert report.passed
    assert report.pairs_checked > 0
    assert report.max_log_excess <= 0


def test_log_concavity_cauchy_fails():
    """Test that polynomial tails violate exponential decay."""
    report = check_log_concavity(cauchy_target(1.0, 2.0), default_check_grid(2.0))
    assert not report.passed
    assert report.worst_pair is not None
    assert report.max_ratio_excess > 0


def test_log_concavity_grid_validation(target):
    """Test grid validation."""
    with pytest.raises(ConfigurationError):
        check_log_concavity(target, [])
    with pytest.raises(ConfigurationError):
        check_log_concavity(target, [1.0, 3.0])
    with pytest.raises(ConfigurationError):
        check_log_concavity(target, [3.0, np.inf])
    with pytest.raises(ConfigurationError):
        check_log_concavity(cauchy_target(), default_check_grid(2.0))


def test_log_concavity_exponential_tail_is_exact():
    """Test that exp(-|x|) passes at alpha = 1 and fails above it."""
    target = laplace_target(1.0, 1.0, 0.0)
    grid = default_check_grid(0.0)
    assert check_log_concavity(target, grid).passed
    assert not check_log_concavity(target, grid, alpha=1.2).passed


@pytest.mark.parametrize(
    "tail_target, x1",
    [(comparison_target(), 2.0), (laplace_target(1.0, 1.0, 0.0), 0.0)],
    ids=["gaussian", "laplace"],
)
def test_log_concavity_monotone_in_alpha(tail_target, x1):
    """Test that passing at alpha implies passing at every smaller alpha."""
    grid = default_check_grid(x1)
    alphas = np.linspace(0.05, 3.0, 30)
    results = [check_log_concavity(tail_target, grid, alpha=a).passed for a in alphas]
    assert results[0]
    first_fail = results.index(False) if False in results else len(results)
    assert all(results[:first_fail])
    assert not any(results[first_fail:])
