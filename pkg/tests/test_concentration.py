#!/usr/bin/env python3
"""Test cases for concentration.py: intervals, inequality checks and aggregation."""

# Standard Library Imports
import math

# Local application/library imports
from concentration import (
    aggregate,
    ar1_case,
    ar1_pv_sq_ratio_bound,
    confidence_halfwidth,
    confidence_interval,
    coverage_study,
    iid_case,
    nominal_coverage,
    plan_aggregation,
    regen_case,
    replications_needed,
    self_normalized_batch,
    self_normalized_stat,
    sigma_hat_sq,
    slln_over_estimate,
    v_norm,
    verify_inequality_mc,
)
from constants import ar1_certificate, make_certificate
from errors import ConfigurationError, NumericalError, PreconditionError
from models import (
    AR1Kernel,
    comparison_target,
    exp_abs,
    normal_proposal,
    one_plus_square,
)
from reporting import set_log_level
from samplers import ChainKind, ar1_paths, ar1_run, make_rng, make_trajectory

# Third-party imports
import numpy as np
import pytest


@pytest.fixture(scope="module")
def ar1_K():
    """K of the AR(1) certificate near its optimum."""
    return ar1_certificate(4.5).K


# -------------- Half-width and V-norm --------------
def test_nominal_coverage():
    """Test 1 - exp(-x^2/2) at x = 2."""
    assert nominal_coverage(2.0) == pytest.approx(1.0 - math.exp(-2.0), abs=1e-12)


def test_confidence_halfwidth_formula():
    """Test the half-width at a hand-computed point."""
    expected = 2.0 / 2.0 * math.sqrt(2.0 * (1.0 + 0.5 * math.log(2.0)))
    assert confidence_halfwidth(4, 1.0, 1.0, 2.0, 1.0) == pytest.approx(expected)


@pytest.mark.parametrize(
    "args",
    [
        (4, 1.0, 1.0, math.sqrt(2.0), 1.0),
        (4, 1.0, 1.0, 2.0, 0.0),
        (0, 1.0, 1.0, 2.0, 1.0),
        (4, 1.0, -1.0, 2.0, 1.0),
    ],
)
def test_confidence_halfwidth_preconditions(args):
    """Test x > sqrt(2), y > 0, n >= 1 and a nonnegative variance."""
    with pytest.raises(PreconditionError):
        confidence_halfwidth(*args)


def test_v_norm_identity_over_quadratic():
    """Test ||x||_V = 1/2 for V = 1 + x^2."""
    result = v_norm(lambda x: x, one_plus_square())
    assert result.value == pytest.approx(0.5, rel=1e-9)
    assert abs(abs(result.argmax) - 1.0) < 1e-4
    assert not result.boundary_warning


def test_v_norm_exponential_weight():
    """Test sup |x| exp(-0.4|x|) = 2.5/e."""
    result = v_norm(lambda x: x, exp_abs(0.4))
    assert result.value == pytest.approx(2.5 / math.e, rel=1e-9)


def test_v_norm_boundary_warning(capsys):
    """Test that an unbounded ratio is flagged at the grid edge."""
    set_log_level("INFO")
    result = v_norm(lambda x: x**3, one_plus_square(), grid=np.linspace(-5, 5, 101))
    assert result.boundary_warning
    assert "[WARNING]" in capsys.readouterr().out
    with pytest.raises(ConfigurationError):
        v_norm(lambda x: x, one_plus_square(), grid=[])


# -------------- Variance over-estimate --------------
def test_sigma_hat_sq_value():
    """Test K^2 (1 + E_q V^2)/n sum V^2 on a two-point trajectory."""
    traj = make_trajectory(ChainKind.AR1, [0.0, 1.0], one_plus_square(), 2)
    cert = make_certificate(0.25, 1.5, 11.0, 0.25)
    result = sigma_hat_sq(traj, cert, 3.0)
    assert cert.K == pytest.approx(31.0)
    assert result.sigma_hat_sq == pytest.approx(31.0**2 * 4.0 / 2.0 * 5.0)
    assert result.epsilon_n_policy == "zero"
    doubled = sigma_hat_sq(traj, cert, 3.0, "doubled")
    assert doubled.K_used == cert.K_variant


def test_sigma_hat_sq_requires_values():
    """Test empty and V-less trajectories are rejected."""
    cert = make_certificate(0.25, 1.5, 11.0, 0.25)
    with pytest.raises(ConfigurationError):
        sigma_hat_sq(
            make_trajectory(ChainKind.AR1, [], one_plus_square(), 0), cert, 1.0
        )
    with pytest.raises(ConfigurationError):
        sigma_hat_sq(make_trajectory(ChainKind.AR1, [1.0], None, 1), cert, 1.0)


def test_ar1_pv_sq_ratio_bound():
    """Test sup PV^2/V^2 = 4.1875, attained at the origin."""
    assert ar1_pv_sq_ratio_bound() == pytest.approx(4.1875, abs=1e-6)


def test_confidence_interval_report(ar1_K):
    """Test the report fields recompute and the interval covers the mean 0."""
    V = one_plus_square()
    cert = ar1_certificate(4.5)
    traj = ar1_run(2000, make_rng(31), stationary=True, V=V)
    report = confidence_interval(traj, lambda x: x, V, cert, ar1_pv_sq_ratio_bound())
    assert report.K_used == ar1_K
    assert report.y_tune == pytest.approx(report.sigma_hat_sq / report.n)
    assert report.nominal_coverage == pytest.approx(1.0 - math.exp(-2.0), abs=1e-12)
    assert report.half_width == pytest.approx(
        confidence_halfwidth(
            report.n, report.g_vnorm, report.sigma_hat_sq, report.x_dev, report.y_tune
        )
    )
    assert abs(report.estimate) <= report.half_width
    assert report.to_dict()["n"] == 2000


def test_slln_over_estimate_converges_to_six():
    """Test (1/2n) sum (PV_k^2 + V_k^2) approaches E V^2 = 6 for the AR(1) chain."""
    V = one_plus_square()
    traj = ar1_run(1_000_000, make_rng(44), stationary=True, V=V)
    pv_sq = np.empty(traj.n)
    pv_sq[0] = 6.0
    pv_sq[1:] = AR1Kernel().closed_form_pv_sq(traj.states[:-1], V)
    value = slln_over_estimate(traj.v_sq_values, pv_sq)
    assert value == pytest.approx(6.0, rel=0.01)
    with pytest.raises(ConfigurationError):
        slln_over_estimate([], [])


# -------------- Chain cases --------------
def test_chain_case_pv_sq_columns():
    """Test the first-step and later PV^2 columns of each case."""
    V = one_plus_square()
    paths = np.array([[0.0, 2.0, -1.0]])
    assert np.all(iid_case(V).pv_sq(paths) == 6.0)
    stationary = ar1_case(V, 36.0).pv_sq(paths)
    assert stationary[0, 0] == pytest.approx(6.0)
    assert stationary[0, 1] == pytest.approx(4.1875)
    started = ar1_case(V, 36.0, stationary=False, initial=2.0).pv_sq(paths)
    assert started[0, 0] == pytest.approx(11.6875)


def test_regen_case_pv_sq():
    """Test the regenerative over-estimate V_{k-1}^2 E_q V^2."""
    V = exp_abs(0.4)
    case = regen_case(comparison_target(), normal_proposal(), V, 5000.0)
    paths = np.array([[0.5, -1.0]])
    eq_v2 = 2.0 * math.exp(0.32) * 0.7881446014166034
    out = case.pv_sq(paths)
    assert out[0, 1] == pytest.approx(math.exp(0.4) * eq_v2, rel=1e-8)
    assert out[0, 0] > 1.0


# -------------- Exponential inequality --------------
def test_verify_lambda_zero_is_exactly_one():
    """Test that lambda = 0 gives estimate 1 and SE 0 without sampling."""
    result = verify_inequality_mc(
        iid_case(one_plus_square()), lambda x: x, 0.0, 20, 100, make_rng(1),
        one_plus_square(),
    )
    assert result.estimate == 1.0
    assert result.se == 0.0
    assert result.passed


@pytest.mark.parametrize("lam", [0.005, 0.01])
def test_verify_iid_and_ar1(lam, ar1_K):
    """Test the inequality for iid draws (K = 1) and the stationary AR(1) chain."""
    V = one_plus_square()
    for case in (iid_case(V), ar1_case(V, ar1_K)):
        result = verify_inequality_mc(case, lambda x: x, lam, 30, 5000, make_rng(2), V)
        assert result.passed
        assert result.L == pytest.approx(0.5, rel=1e-6)
        assert result.lambda_used == lam


def test_verify_regen():
    """Test the inequality along regenerative chains."""
    V = exp_abs(0.4)
    case = regen_case(comparison_target(), normal_proposal(), V, 4500.0)
    result = verify_inequality_mc(case, lambda x: x, 0.01, 20, 300, make_rng(3), V)
    assert result.passed
    assert result.estimate <= 1.0 + 3.0 * result.se


def test_verify_halves_lambda(capsys):
    """Test that a non-finite exponent reduces lambda and warns."""
    set_log_level("INFO")
    V = one_plus_square()
    result = verify_inequality_mc(
        iid_case(V), lambda x: x, 1e155, 10, 50, make_rng(4), V
    )
    assert result.lambda_used < result.lambda_requested
    assert "halving lambda" in capsys.readouterr().out
    with pytest.raises(NumericalError):
        verify_inequality_mc(iid_case(V), lambda x: x, 1e200, 10, 50, make_rng(4), V)


def test_verify_overflowing_estimate_fails(capsys):
    """Test that an estimate beyond the float range fails instead of raising."""
    set_log_level("INFO")
    V = one_plus_square()
    result = verify_inequality_mc(
        ar1_case(V, 1e-6), lambda x: x, 200.0, 30, 200, make_rng(1), V
    )
    assert result.estimate == math.inf
    assert result.se == math.inf
    assert not result.passed
    assert result.lambda_used == 200.0
    assert "exceeds the float range" in capsys.readouterr().out


def test_verify_preconditions():
    """Test reps and n validation."""
    V = one_plus_square()
    with pytest.raises(ConfigurationError):
        verify_inequality_mc(iid_case(V), lambda x: x, 0.01, 10, 1, make_rng(1), V)
    with pytest.raises(ConfigurationError):
        verify_inequality_mc(iid_case(V), lambda x: x, 0.01, 0, 10, make_rng(1), V)


# -------------- Self-normalized statistic --------------
def test_self_normalized_value():
    """Test Y at a hand-computed point."""
    value = self_normalized_stat(np.array([1.0, 2.0]), [1.0, 1.0], [1.0, 1.0], 1.0)
    assert value == pytest.approx(2.0 / math.sqrt(11.0))
    batch = self_normalized_batch(np.array([[1.0, 2.0], [0.0, 0.0]]), 1.0, 1.0, 1.0)
    assert batch.shape == (2,)
    with pytest.raises(PreconditionError):
        self_normalized_batch(np.zeros((1, 1)), 0.0, 0.0, 0.0)


def test_self_normalized_from_trajectory():
    """Test Y read from a trajectory's V values."""
    traj = make_trajectory(ChainKind.AR1, [0.0, 1.0], one_plus_square(), 2)
    value = self_normalized_stat(traj, [6.0, 6.0], 6.0, 3.0)
    assert value == pytest.approx(0.0)



def test_self_normalized_ar1_tails():
    """Test that |Y| stays below 4 at its 99th percentile for the AR(1) chain."""
    V = one_plus_square()
    paths = ar1_paths(100, 10_000, make_rng(52), stationary=True)
    pv_sq = ar1_case(V, 1.0).pv_sq(paths)
    y = self_normalized_batch(V.eval(paths), pv_sq, 6.0, 100 * 2.0)
    assert y.shape == (10_000,)
    assert np.percentile(np.abs(y), 99) <= 4.0

# -------------- Aggregation --------------
@pytest.mark.parametrize(
    "mode, alpha, a, expected",
    [
        ("mean", 0.01, 0.1, 2),
        ("median", 0.01, 0.1, 10),
        ("mean", 0.0999, 0.1, 2),
        ("mean", 0.05, 0.2, 2),
        ("median", 0.05, 0.2, 14),
        ("mean", 0.2 * (1.0 - 1e-12), 0.2, 1),
    ],
)
def test_replications_needed(mode, alpha, a, expected):
    """Test the minimal replication counts."""
    assert replications_needed(mode, alpha, a) == expected


def test_replications_needed_preconditions():
    """Test level preconditions and the mode name."""
    with pytest.raises(PreconditionError):
        replications_needed("mean", 0.01, 0.5)
    with pytest.raises(PreconditionError):
        replications_needed("mean", 0.2, 0.1)
    with pytest.raises(ConfigurationError):
        replications_needed("mode", 0.01, 0.1)
    plan = plan_aggregation("median", 0.01, 0.1)
    assert plan.m == 10
    assert plan.final_level_alpha == 0.01


def test_aggregate():
    """Test the mean and the lower-middle median."""
    assert aggregate([4.0, 1.0, 3.0, 2.0], "mean") == 2.5
    assert aggregate([4.0, 1.0, 3.0, 2.0], "median") == 2.0
    assert aggregate([5.0, 1.0, 3.0], "median") == 3.0
    with pytest.raises(ConfigurationError):
        aggregate([], "mean")
    with pytest.raises(ConfigurationError):
        aggregate([1.0], "trimmed")


# -------------- Coverage --------------
def test_coverage_study(ar1_K):
    """Test that the interval covers 0 at least at its nominal rate."""
    result = coverage_study(200, 300, make_rng(5), ar1_K)
    assert result.passed
    assert result.coverage >= result.nominal - 3.0 * result.se
    assert result.mean_half_width > 0
