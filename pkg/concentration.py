"""
concentration.py - variance over-estimates, observable confidence intervals,
Monte-Carlo checks of the exponential inequality, the self-normalized
statistic and mean/median aggregation.

Part of the mcmc-certify project.
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence, Union

# Third-party Imports
import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

# Local Application/Library-specific Imports
from constants import DriftCertificate, KVariant
from errors import ConfigurationError, NumericalError, PreconditionError
from models import (
    AR1Kernel,
    IIDKernel,
    LyapunovFunction,
    SymmetricProposal,
    UnnormalizedTarget,
    expectation_under_proposal,
    one_plus_square,
    stationary_moment,
)
from reporting import log_debug, log_warning
from samplers import Trajectory, ar1_paths, iid_paths, regen_metropolis_batch

# ------------------------ Constants ------------------------
SQRT2 = math.sqrt(2.0)
OVERSHOOT_GUARD = 1e-9
MAX_LAMBDA_HALVINGS = 20
DEFAULT_VNORM_GRID = np.linspace(-50.0, 50.0, 4001)
PATH_CHUNK = 10_000


# ------------------------ Domain Types ------------------------
@dataclass
class VarianceOverEstimate:
    """K^2 ((1 + E_q V^2)/n sum V^2(X_k) + eps_n) with eps_n = 0."""

    sigma_hat_sq: float
    K_used: float
    eq_v2_proposal: float
    n: int
    epsilon_n_policy: str = "zero"


@dataclass
class ConfidenceReport:
    """Estimate, half-width and every input needed to recompute them."""

    estimate: float
    half_width: float
    x_dev: float
    y_tune: float
    nominal_coverage: float
    g_vnorm: float
    n: int
    sigma_hat_sq: float
    K_used: float
    eq_v2_proposal: float
    vnorm_boundary_warning: bool = False

    def to_dict(self):
        """JSON-ready record."""
        return asdict(self)


@dataclass
class AggregationPlan:
    """How many replications to combine, and how."""

    mode: str
    m: int
    per_rep_level_a: float
    final_level_alpha: float


@dataclass
class VNormResult:
    """sup |g|/V on a grid."""

    value: float
    argmax: float
    boundary_warning: bool


@dataclass
class InequalityCheck:
    """Monte-Carlo estimate of the exponential moment in the main inequality."""

    case: str
    estimate: float
    se: float
    passed: bool
    lambda_requested: float
    lambda_used: float
    n: int
    reps: int
    K: float
    L: float
    centering: float
    centering_se: float

    def to_dict(self):
        """JSON-ready record."""
        return asdict(self)


@dataclass
class ChainCase:
    """A chain for the Monte-Carlo inequality check.

    `simulate(n, reps, rng)` returns a (reps, n) array of states and
    `pv_sq(paths)` the matching (reps, n) array of PV_k^2 values.
    """

    name: str
    simulate: Callable
    pv_sq: Callable
    K: float


@dataclass
class CoverageResult:
    """Empirical coverage of the confidence interval."""

    coverage: float
    se: float
    nominal: float
    passed: bool
    n: int
    reps: int
    mean_half_width: float


# ------------------------ V-norm and variance ------------------------
def v_norm(
    g: Callable, V: LyapunovFunction, grid: Optional[Sequence[float]] = None
) -> VNormResult:
    """sup |g(x)|/V(x) over a grid with one refinement pass around the argmax."""
    points = DEFAULT_VNORM_GRID if grid is None else np.asarray(grid, dtype=float)
    if points.size == 0:
        raise ConfigurationError("v_norm grid is empty", "grid")

    def ratio(x):
        return np.abs(np.asarray(g(x), dtype=float)) / V.eval(x)

    values = np.broadcast_to(ratio(points), points.shape).astype(float)
    idx = int(np.argmax(values))
    best, where = float(values[idx]), float(points[idx])
    boundary = False
    if points.size > 1 and idx in (0, points.size - 1):
        neighbour = values[1] if idx == 0 else values[-2]
        boundary = bool(values[idx] > neighbour)
    if boundary:
        log_warning(
            f"sup |g|/V attained at the grid boundary x={where:.6g}; "
            "the ratio may be unbounded"
        )
    elif 0 < idx < points.size - 1:
        result = minimize_scalar(
            lambda x: -float(ratio(x)),
            bounds=(points[idx - 1], points[idx + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if -result.fun > best:
            best, where = float(-result.fun), float(result.x)
    return VNormResult(best, where, boundary)


def sigma_hat_sq(
    traj: Trajectory,
    cert: DriftCertificate,
    eq_v2: float,
    variant="standard",
) -> VarianceOverEstimate:
    """Observable over-estimate of the asymptotic variance."""
    if traj.n == 0:
        raise ConfigurationError("cannot estimate a variance from an empty trajectory")
    if not np.all(np.isfinite(traj.v_sq_values)):
        raise ConfigurationError("trajectory has no V^2 values")
    K = float(cert.K_for(KVariant(variant)))
    value = K * K * ((1.0 + eq_v2) / traj.n * float(np.sum(traj.v_sq_values)))
    return VarianceOverEstimate(value, K, float(eq_v2), traj.n)


def ar1_pv_sq_ratio_bound(V: Optional[LyapunovFunction] = None) -> float:
    """sup_x P(V^2)(x) / V^2(x) for the AR(1) toy chain."""
    V = one_plus_square() if V is None else V
    kernel = AR1Kernel()

    def ratio(x):
        return kernel.closed_form_pv_sq(x, V) / V.eval_sq(x)

    grid = np.linspace(0.0, 50.0, 2001)
    values = np.asarray(ratio(grid), dtype=float)
    idx = int(np.argmax(values))
    best = float(values[idx])
    lo, hi = grid[max(idx - 1, 0)], grid[min(idx + 1, grid.size - 1)]
    result = minimize_scalar(
        lambda x: -float(ratio(x)), bounds=(lo, hi), method="bounded"
    )
    return max(best, float(-result.fun))


def nominal_coverage(x_dev: float) -> float:
    """1 - exp(-x^2/2)."""
    return 1.0 - math.exp(-x_dev * x_dev / 2.0)


def confidence_halfwidth(
    n: int, g_vnorm: float, sigma_hat_sq: float, x_dev: float, y_tune: float
) -> float:
    """x ||g||_V / sqrt(n) * sqrt((s2 + y)(1 + log(s2/y + 1)/2))."""
    if not x_dev > SQRT2:
        raise PreconditionError(f"x={x_dev} must exceed sqrt(2)", "experiment.x_dev")
    if not y_tune > 0:
        raise PreconditionError(f"y={y_tune} must be positive", "experiment.y_tune")
    if n < 1:
        raise PreconditionError(f"n={n} must be at least 1", "experiment.n")
    if sigma_hat_sq < 0:
        raise PreconditionError("variance over-estimate must be nonnegative")
    spread = (sigma_hat_sq + y_tune) * (
        1.0 + 0.5 * math.log(sigma_hat_sq / y_tune + 1.0)
    )
    return x_dev * g_vnorm / math.sqrt(n) * math.sqrt(spread)


def confidence_interval(
    traj: Trajectory,
    g: Callable,
    V: LyapunovFunction,
    cert: DriftCertificate,
    eq_v2: float,
    x_dev: float = 2.0,
    y_tune: Optional[float] = None,
    variant="standard",
    grid: Optional[Sequence[float]] = None,
) -> ConfidenceReport:
    """Interval for the mean of g; y defaults to sigma_hat^2 / n."""
    variance = sigma_hat_sq(traj, cert, eq_v2, variant)
    norm = v_norm(g, V, grid)
    y = variance.sigma_hat_sq / traj.n if y_tune is None else float(y_tune)
    half_width = confidence_halfwidth(
        traj.n, norm.value, variance.sigma_hat_sq, x_dev, y
    )
    estimate = float(np.mean(np.asarray(g(traj.states), dtype=float)))
    return ConfidenceReport(
        estimate=estimate,
        half_width=half_width,
        x_dev=float(x_dev),
        y_tune=y,
        nominal_coverage=nominal_coverage(x_dev),
        g_vnorm=norm.value,
        n=traj.n,
        sigma_hat_sq=variance.sigma_hat_sq,
        K_used=variance.K_used,
        eq_v2_proposal=variance.eq_v2_proposal,
        vnorm_boundary_warning=norm.boundary_warning,
    )


def slln_over_estimate(v_sq_values, pv_sq_values, K: float = 1.0) -> float:
    """(K^2 / 2n) sum (PV_k^2 + V_k^2)."""
    v_sq = np.asarray(v_sq_values, dtype=float)
    pv_sq = np.asarray(pv_sq_values, dtype=float)
    if v_sq.size == 0:
        raise ConfigurationError("empty trajectory")
    return K * K * float(np.sum(pv_sq + v_sq)) / (2.0 * v_sq.size)


# ------------------------ Chain cases ------------------------
def iid_case(V: LyapunovFunction) -> ChainCase:
    """Independent standard normal draws; K = 1."""
    pv_sq = float(IIDKernel().closed_form_pv_sq(0.0, V))
    return ChainCase(
        name="iid",
        simulate=lambda n, reps, rng: iid_paths(n, reps, rng),
        pv_sq=lambda paths: np.full(paths.shape, pv_sq),
        K=1.0,
    )


def ar1_case(
    V: LyapunovFunction, K: float, stationary: bool = True, initial: float = 0.0
) -> ChainCase:
    """AR(1) toy chain with closed-form PV_k^2."""
    kernel = AR1Kernel()
    if stationary:
        first = float(IIDKernel().closed_form_pv_sq(0.0, V))
    else:
        first = float(kernel.closed_form_pv_sq(initial, V))

    def pv_sq(paths):
        out = np.empty(paths.shape)
        out[:, 0] = first
        out[:, 1:] = kernel.closed_form_pv_sq(paths[:, :-1], V)
        return out

    return ChainCase(
        name="ar1",
        simulate=lambda n, reps, rng: ar1_paths(n, reps, rng, initial, stationary),
        pv_sq=pv_sq,
        K=K,
    )


def regen_case(
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    V: LyapunovFunction,
    K: float,
) -> ChainCase:
    """Regenerative Metropolis chain; PV_k^2 over-estimated by V_{k-1}^2 E_q V^2."""
    eq_v2 = expectation_under_proposal(proposal, lambda z: float(V.eval_sq(z)))
    first = stationary_moment(target, lambda x: float(V.eval_sq(x)))

    def pv_sq(paths):
        out = np.empty(paths.shape)
        out[:, 0] = first
        out[:, 1:] = V.eval_sq(paths[:, :-1]) * eq_v2
        return out

    return ChainCase(
        name="regen",
        simulate=lambda n, reps, rng: regen_metropolis_batch(
            n, reps, target, proposal, rng
        ).states,
        pv_sq=pv_sq,
        K=K,
    )


# ------------------------ Exponential inequality ------------------------
def _chunks(total: int, size: int = PATH_CHUNK):
    """Yield chunk sizes summing to total."""
    while total > 0:
        step = min(size, total)
        yield step
        total -= step


def _sum_g(g: Callable, paths: np.ndarray) -> np.ndarray:
    """f = sum_k g(X_k) per path."""
    return np.asarray(g(paths), dtype=float).sum(axis=1)


def _exp_or_inf(log_value: float) -> float:
    """exp(log_value), or inf above the largest float."""
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


def verify_inequality_mc(
    case: ChainCase,
    g: Callable,
    lam: float,
    n: int,
    reps: int,
    rng,
    V: LyapunovFunction,
    L: Optional[float] = None,
    batch_factor: int = 10,
) -> InequalityCheck:
    """Estimate E[exp(lam (f - E f) - lam^2/2 sum c_k^2 (PV_k^2 + V_k^2))].

    f = sum g(X_k), c_k = K L with L = ||g||_V. E f comes from an independent
    batch of batch_factor * reps paths. Passes when the estimate is at most
    1 + 3 combined standard errors.
    """
    if reps < 2:
        raise ConfigurationError(f"reps={reps} must be at least 2", "experiment.reps")
    if n < 1:
        raise ConfigurationError(f"n={n} must be at least 1", "experiment.n")
    L = v_norm(g, V).value if L is None else float(L)
    c_sq = (case.K * L) ** 2

    if lam == 0.0:
        log_debug("lambda = 0: the integrand is identically one")
        return InequalityCheck(
            case.name, 1.0, 0.0, True, 0.0, 0.0, n, reps, case.K, L, math.nan, 0.0
        )

    centering_values = np.concatenate(
        [_sum_g(g, case.simulate(n, size, rng)) for size in
         _chunks(batch_factor * reps)]
    )
    centering = float(centering_values.mean())
    centering_se = float(
        centering_values.std(ddof=1) / math.sqrt(centering_values.size)
    )

    deviations = []
    quadratic = []
    for size in _chunks(reps):
        paths = case.simulate(n, size, rng)
        deviations.append(_sum_g(g, paths) - centering)
        quadratic.append(np.sum(case.pv_sq(paths) + V.eval_sq(paths), axis=1))
    deviations = np.concatenate(deviations)
    quadratic = np.concatenate(quadratic)

    lam_used = float(lam)
    for _ in range(MAX_LAMBDA_HALVINGS):
        with np.errstate(over="ignore", invalid="ignore"):
            logs = lam_used * deviations - 0.5 * np.square(lam_used) * c_sq * quadratic
        if np.all(np.isfinite(logs)):
            break
        log_warning(f"exponent not finite at lambda={lam_used:.6g}; halving lambda")
        lam_used /= 2.0
    else:
        raise NumericalError("exponent stays non-finite after reducing lambda")

    log_max = float(logs.max())
    log_mean = float(logsumexp(logs) - math.log(reps))
    spread = float(np.exp(logs - log_max).std(ddof=1))
    log_se = -math.inf
    if spread > 0:
        log_se = log_max + math.log(spread) - 0.5 * math.log(reps)
    estimate = _exp_or_inf(log_mean)
    se = _exp_or_inf(log_se)
    if math.isinf(estimate):
        log_warning(
            f"{case.name}: estimate exp({log_mean:.6g}) exceeds the float range "
            f"at lambda={lam_used:.6g}"
        )
        combined = math.inf
    else:
        combined = math.hypot(se, abs(lam_used) * estimate * centering_se)
    passed = bool(math.isfinite(combined) and estimate <= 1.0 + 3.0 * combined)
    log_debug(
        f"{case.name}: estimate {estimate:.6g} +- {combined:.3g} at lambda={lam_used}"
    )
    return InequalityCheck(
        case=case.name,
        estimate=estimate,
        se=combined,
        passed=passed,
        lambda_requested=float(lam),
        lambda_used=lam_used,
        n=n,
        reps=reps,
        K=case.K,
        L=L,
        centering=centering,
        centering_se=centering_se,
    )


# ------------------------ Self-normalized statistic ------------------------
def self_normalized_batch(v_paths, pv_sq_paths, ex_v_sq, f_mean: float) -> np.ndarray:
    """Y per row: (sum V_k - E f) / sqrt(sum (PV_k^2 + V_k^2 + 2 E V_k^2))."""
    v = np.atleast_2d(np.asarray(v_paths, dtype=float))
    pv_sq = np.broadcast_to(np.asarray(pv_sq_paths, dtype=float), v.shape)
    ex = np.broadcast_to(np.asarray(ex_v_sq, dtype=float), v.shape)
    denominator = np.sum(pv_sq + v * v + 2.0 * ex, axis=1)
    if np.any(denominator <= 0):
        raise PreconditionError("self-normalizing denominator must be positive")
    return (v.sum(axis=1) - f_mean) / np.sqrt(denominator)


def self_normalized_stat(
    traj: Union[Trajectory, np.ndarray], pv_sq, ex_v_sq, f_mean: float
) -> float:
    """Y for a single trajectory (f = sum V_k, centered by f_mean)."""
    v = traj.v_values if isinstance(traj, Trajectory) else traj
    return float(self_normalized_batch(v, pv_sq, ex_v_sq, f_mean)[0])


# ------------------------ Aggregation ------------------------
def replications_needed(mode: str, alpha: float, a: float) -> int:
    """Smallest m with a^m <= alpha (mean) or (4a(1-a))^(m/2) <= alpha (median)."""
    if not 0.0 < a < 0.5:
        raise PreconditionError(
            f"a={a} must lie in (0, 1/2)", "experiment.aggregation.a"
        )
    if not 0.0 < alpha < a:
        raise PreconditionError(
            f"alpha={alpha} must lie in (0, a={a})", "experiment.aggregation.alpha"
        )
    if mode == "mean":
        ratio = math.log(alpha) / math.log(a)
    elif mode == "median":
        ratio = 2.0 * math.log(alpha) / math.log(4.0 * a * (1.0 - a))
    else:
        raise ConfigurationError(
            f"unknown aggregation mode {mode!r}", "experiment.aggregation.mode"
        )
    return max(1, math.ceil(ratio * (1.0 - OVERSHOOT_GUARD)))


def plan_aggregation(mode: str, alpha: float, a: float) -> AggregationPlan:
    """AggregationPlan with the minimal replication count."""
    return AggregationPlan(mode, replications_needed(mode, alpha, a), a, alpha)


def aggregate(estimates: Sequence[float], mode: str) -> float:
    """Mean, or median taking the lower-middle element for even counts."""
    values = np.asarray(estimates, dtype=float).reshape(-1)
    if values.size == 0:
        raise ConfigurationError("nothing to aggregate")
    if mode == "mean":
        return float(values.mean())
    if mode == "median":
        return float(np.sort(values)[(values.size - 1) // 2])
    raise ConfigurationError(
        f"unknown aggregation mode {mode!r}", "experiment.aggregation.mode"
    )


# ------------------------ Coverage ------------------------
def coverage_study(
    n: int,
    reps: int,
    rng,
    K: float,
    x_dev: float = 2.0,
    y_tune: Optional[float] = None,
) -> CoverageResult:
    """Coverage of 0 by the interval for g(x) = x along stationary AR(1) paths."""
    V = one_plus_square()
    eq_v2 = ar1_pv_sq_ratio_bound(V)
    L = v_norm(lambda x: x, V).value
    covered = 0
    widths = []
    for size in _chunks(reps):
        paths = ar1_paths(n, size, rng, stationary=True)
        s2 = K * K * (1.0 + eq_v2) / n * np.sum(V.eval_sq(paths), axis=1)
        for estimate, variance in zip(paths.mean(axis=1), s2):
            y = variance / n if y_tune is None else y_tune
            width = confidence_halfwidth(n, L, float(variance), x_dev, y)
            widths.append(width)
            covered += abs(estimate) <= width
    coverage = covered / reps
    nominal = nominal_coverage(x_dev)
    se = math.sqrt(max(nominal * (1.0 - nominal), 1e-12) / reps)
    return CoverageResult(
        coverage=coverage,
        se=se,
        nominal=nominal,
        passed=bool(coverage >= nominal - 3.0 * se),
        n=n,
        reps=reps,
        mean_half_width=float(np.mean(widths)),
    )
