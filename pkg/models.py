"""
models.py - targets, proposals, Lyapunov functions and hypothesis checks.

Part of the mcmc-certify project.

A target is an unnormalized log-density log h on the real line, optionally
declaring the tail log-concavity parameters (alpha, x1). A proposal is a
symmetric normalized density q with an exponential envelope
q(x) <= C exp(-alpha |x|). Transition kernels expose the one-step
conditional expectation PV(x) three ways (closed form, quadrature,
Monte Carlo) so that drift conditions PV <= beta V + b can be verified.
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

# Third-party Imports
import numpy as np
from scipy import stats
from scipy.integrate import IntegrationWarning, quad

# Local Application/Library-specific Imports
from errors import (
    ConfigurationError,
    DivergenceError,
    EvaluationError,
    NumericalError,
    PreconditionError,
)
from reporting import log_debug

# ------------------------ Constants ------------------------
TAIL_MASS = 1e-12
QUAD_ABS_TOL = 1e-10
QUAD_LIMIT = 500
DEFAULT_GRID_POINTS = 400
DEFAULT_GRID_SPAN = 50.0
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DriftMethod(Enum):
    """How PV(x) is evaluated in a drift check."""

    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


# ------------------------ Domain Types ------------------------
@dataclass(frozen=True)
class UnnormalizedTarget:
    """Unnormalized log-density on the real line."""

    log_h: Callable[[Any], Any]
    tail_decay_alpha: Optional[float] = None
    tail_threshold_x1: Optional[float] = None
    true_mean: Optional[float] = None
    name: str = "custom"

    def h(self, x):
        """Evaluate the unnormalized density."""
        return np.exp(self.log_h(x))

    def checked_log_h(self, x) -> np.ndarray:
        """Evaluate log h, raising EvaluationError on non-finite values."""
        values = np.asarray(self.log_h(np.asarray(x, dtype=float)), dtype=float)
        if not np.all(np.isfinite(values)):
            bad = np.asarray(x, dtype=float).reshape(-1)[
                ~np.isfinite(values.reshape(-1))
            ]
            raise EvaluationError(
                f"log h of target '{self.name}' is not finite at x={bad[0]!r}"
            )
        return values


@dataclass(frozen=True)
class SymmetricProposal:
    """Symmetric normalized proposal density with an exponential envelope."""

    log_q: Callable[[Any], Any]
    sampler: Callable[..., Any]
    envelope_C: float
    decay_alpha: float
    name: str = "custom"

    def pdf(self, x):
        """Evaluate the proposal density."""
        return np.exp(self.log_q(x))

    def sample(self, rng, size=None):
        """Draw increments Z from the proposal."""
        return self.sampler(rng, size)

    def tail_cutoff(self, mass: float = TAIL_MASS) -> float:
        """Return T such that the envelope puts less than `mass` outside [-T, T]."""
        cutoff = math.log(2.0 * self.envelope_C / (self.decay_alpha * mass))
        return max(1.0, cutoff / self.decay_alpha)


@dataclass(frozen=True)
class LyapunovFunction:
    """Lyapunov function V >= 1: exp(s|x|) or 1 + x^2."""

    family: str
    s: float = 0.0

    def __post_init__(self):
        """Validate the family and its parameter."""
        if self.family not in ("exp_abs", "one_plus_square"):
            raise ConfigurationError(
                f"unknown Lyapunov family '{self.family}'", "model.lyapunov.family"
            )
        if self.family == "exp_abs" and not self.s > 0:
            raise PreconditionError("s must be positive", "model.lyapunov.s")

    def eval(self, x):
        """Evaluate V(x)."""
        if self.family == "exp_abs":
            return np.exp(self.s * np.abs(x))
        return 1.0 + np.square(x)

    def eval_sq(self, x):
        """Evaluate V(x)^2."""
        return np.square(self.eval(x))

    def sublevel_half_width(self, R: float) -> float:
        """Return w with {V <= R} = [-w, w]."""
        if R < 1.0:
            raise PreconditionError(f"level R={R} is below min V = 1")
        if self.family == "exp_abs":
            return math.log(R) / self.s
        return math.sqrt(R - 1.0)

    def describe(self) -> str:
        """Return a short human readable name."""
        if self.family == "exp_abs":
            return f"exp({self.s}|x|)"
        return "1+x^2"


@dataclass
class DriftCheckReport:
    """Outcome of a drift verification PV <= beta V + b."""

    beta: float
    b: float
    max_violation: float
    method: DriftMethod
    tolerance: float
    passed: bool
    worst_point: Optional[float] = None
    standard_errors: Optional[List[float]] = None


@dataclass
class LogConcavityReport:
    """Outcome of a tail log-concavity check on a grid."""

    passed: bool
    alpha: float
    x1: float
    max_log_excess: float
    max_ratio_excess: float
    worst_pair: Optional[Tuple[float, float]] = None
    pairs_checked: int = 0


@dataclass
class GridCheckReport:
    """Outcome of a grid-based proposal check (symmetry, envelope, mass)."""

    name: str
    passed: bool
    max_deviation: float
    worst_point: Optional[float] = None
    details: Dict[str, float] = field(default_factory=dict)


# ------------------------ Families ------------------------
def gaussian_target(
    center: float = 0.0,
    variance: float = 1.0,
    normalized: bool = False,
    tail_decay_alpha: Optional[float] = None,
    tail_threshold_x1: Optional[float] = None,
) -> UnnormalizedTarget:
    """Target h(x) = exp(-(x-center)^2 / (2 variance)), optionally normalized."""
    if not variance > 0:
        raise PreconditionError("variance must be positive", "model.target.variance")
    offset = -0.5 * math.log(2.0 * math.pi * variance) if normalized else 0.0

    def log_h(x):
        return offset - np.square(np.asarray(x, dtype=float) - center) / (
            2.0 * variance
        )

    return UnnormalizedTarget(
        log_h=log_h,
        tail_decay_alpha=tail_decay_alpha,
        tail_threshold_x1=tail_threshold_x1,
        true_mean=center,
        name=f"gaussian(center={center}, variance={variance})",
    )


def laplace_target(
    scale: float = 1.0,
    tail_decay_alpha: Optional[float] = None,
    tail_threshold_x1: Optional[float] = None,
) -> UnnormalizedTarget:
    """Target h(x) = exp(-|x| / scale)."""
    if not scale > 0:
        raise PreconditionError("scale must be positive", "model.target.scale")

    def log_h(x):
        return -np.abs(np.asarray(x, dtype=float)) / scale

    return UnnormalizedTarget(
        log_h=log_h,
        tail_decay_alpha=tail_decay_alpha,
        tail_threshold_x1=tail_threshold_x1,
        true_mean=0.0,
        name=f"laplace(scale={scale})",
    )


def cauchy_target(
    tail_decay_alpha: Optional[float] = None,
    tail_threshold_x1: Optional[float] = None,
) -> UnnormalizedTarget:
    """Target h(x) = 1 / (1 + x^2); polynomial tails."""

    def log_h(x):
        return -np.log1p(np.square(np.asarray(x, dtype=float)))

    return UnnormalizedTarget(
        log_h=log_h,
        tail_decay_alpha=tail_decay_alpha,
        tail_threshold_x1=tail_threshold_x1,
        name="cauchy",
    )


def normal_proposal(scale: float = 1.0, decay_alpha: float = 1.0) -> SymmetricProposal:
    """Centered normal proposal; any decay_alpha admits an envelope constant."""
    if not scale > 0:
        raise PreconditionError("scale must be positive", "model.proposal.scale")
    if not decay_alpha > 0:
        raise PreconditionError(
            "decay_alpha must be positive", "model.proposal.decay_alpha"
        )
    log_norm = -LOG_SQRT_2PI - math.log(scale)
    # max over x of -x^2/(2 scale^2) + alpha |x| is alpha^2 scale^2 / 2
    envelope_C = math.exp(log_norm + 0.5 * (decay_alpha * scale) ** 2)

    def log_q(z):
        return log_norm - np.square(np.asarray(z, dtype=float)) / (2.0 * scale**2)

    def sampler(rng, size=None):
        return scale * rng.standard_normal(size)

    return SymmetricProposal(
        log_q=log_q,
        sampler=sampler,
        envelope_C=envelope_C,
        decay_alpha=decay_alpha,
        name=f"normal(scale={scale})",
    )


def laplace_proposal(scale: float = 1.0) -> SymmetricProposal:
    """Centered Laplace proposal with its exact exponential envelope."""
    if not scale > 0:
        raise PreconditionError("scale must be positive", "model.proposal.scale")
    log_norm = -math.log(2.0 * scale)

    def log_q(z):
        return log_norm - np.abs(np.asarray(z, dtype=float)) / scale

    def sampler(rng, size=None):
        return rng.laplace(0.0, scale, size)

    return SymmetricProposal(
        log_q=log_q,
        sampler=sampler,
        envelope_C=math.exp(log_norm),
        decay_alpha=1.0 / scale,
        name=f"laplace(scale={scale})",
    )


def exp_abs(s: float) -> LyapunovFunction:
    """Lyapunov function V(x) = exp(s|x|)."""
    return LyapunovFunction("exp_abs", s)


def one_plus_square() -> LyapunovFunction:
    """Lyapunov function V(x) = 1 + x^2."""
    return LyapunovFunction("one_plus_square")


def comparison_target() -> UnnormalizedTarget:
    """The comparison model h(x) = exp(-(x-1)^2), alpha=1 beyond x1=2."""
    return gaussian_target(
        center=1.0, variance=0.5, tail_decay_alpha=1.0, tail_threshold_x1=2.0
    )


# ------------------------ Config Builders ------------------------
def _param(spec: Dict[str, Any], key: str, default: Any, path: str) -> Any:
    """Read an optional numeric parameter, naming the field on failure."""
    value = spec.get(key, default)
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"expected a number, got {value!r}", f"{path}.{key}")


def build_target(
    spec: Dict[str, Any], path: str = "model.target"
) -> UnnormalizedTarget:
    """Build a target from its configuration record."""
    family = spec.get("family")
    alpha = _param(spec, "tail_decay_alpha", None, path)
    x1 = _param(spec, "tail_threshold_x1", None, path)
    if alpha is not None and not alpha > 0:
        raise PreconditionError("must be positive", f"{path}.tail_decay_alpha")
    if x1 is not None and x1 < 0:
        raise PreconditionError("must be nonnegative", f"{path}.tail_threshold_x1")
    if family == "gaussian":
        target = gaussian_target(
            center=_param(spec, "center", 0.0, path),
            variance=_param(spec, "variance", 1.0, path),
            normalized=bool(spec.get("normalized", False)),
            tail_decay_alpha=alpha,
            tail_threshold_x1=x1,
        )
    elif family == "laplace":
        target = laplace_target(_param(spec, "scale", 1.0, path), alpha, x1)
    elif family == "cauchy":
        target = cauchy_target(alpha, x1)
    else:
        raise ConfigurationError(f"unknown target family {family!r}", f"{path}.family")
    true_mean = _param(spec, "true_mean", target.true_mean, path)
    if true_mean != target.true_mean:
        target = UnnormalizedTarget(
            target.log_h, target.tail_decay_alpha, target.tail_threshold_x1,
            true_mean, target.name,
        )
    return target


def build_proposal(
    spec: Dict[str, Any], path: str = "model.proposal"
) -> SymmetricProposal:
    """Build a proposal from its configuration record."""
    family = spec.get("family", "normal")
    if family == "normal":
        return normal_proposal(
            _param(spec, "scale", 1.0, path), _param(spec, "decay_alpha", 1.0, path)
        )
    if family == "laplace":
        return laplace_proposal(_param(spec, "scale", 1.0, path))
    raise ConfigurationError(f"unknown proposal family {family!r}", f"{path}.family")


def build_lyapunov(
    spec: Dict[str, Any], path: str = "model.lyapunov"
) -> LyapunovFunction:
    """Build a Lyapunov function from its configuration record."""
    family = spec.get("family", "exp_abs")
    if family == "exp_abs":
        s = _param(spec, "s", None, path)
        if s is None:
            raise ConfigurationError("missing parameter", f"{path}.s")
        return exp_abs(s)
    if family == "one_plus_square":
        return one_plus_square()
    raise ConfigurationError(f"unknown Lyapunov family {family!r}", f"{path}.family")


# ------------------------ Quadrature ------------------------
def _quad(func: Callable[[float], float], lo: float, hi: float, points=None):
    """Run scipy quad with warnings silenced; returns (value, error)."""
    with warnings.catch_warnings(), np.errstate(over="ignore", invalid="ignore"):
        warnings.simplefilter("ignore", IntegrationWarning)
        value, error = quad(
            func,
            lo,
            hi,
            points=points,
            epsabs=QUAD_ABS_TOL * 0.1,
            epsrel=1e-12,
            limit=QUAD_LIMIT,
        )
    return value, error


def expectation_under_proposal(
    proposal: SymmetricProposal,
    integrand: Callable[[float], float],
    abs_tol: float = QUAD_ABS_TOL,
    max_doublings: int = 6,
) -> float:
    """Return E_q[integrand(Z)] by adaptive quadrature on [-T, T].

    T starts where the envelope leaves tail mass below 1e-12 and doubles
    while the estimated tail contribution exceeds abs_tol.
    """
    cutoff = proposal.tail_cutoff()

    def weighted(z):
        return float(integrand(z)) * float(proposal.pdf(z))

    def magnitude(z):
        return abs(weighted(z))

    for _ in range(max_doublings + 1):
        value, error = _quad(weighted, -cutoff, cutoff, points=[0.0])
        tail = _quad(magnitude, cutoff, 2.0 * cutoff)[0]
        tail += _quad(magnitude, -2.0 * cutoff, -cutoff)[0]
        if not (math.isfinite(value) and math.isfinite(tail)):
            raise DivergenceError(
                f"integral under {proposal.name} is not finite on [-{cutoff}, {cutoff}]"
            )
        if tail <= abs_tol and error <= max(abs_tol, 1e-12 * abs(value)):
            return value
        log_debug(
            f"Widening quadrature window to {2.0 * cutoff:.3g} "
            f"(tail estimate {tail:.3g})"
        )
        cutoff *= 2.0
    raise DivergenceError(
        f"integral under {proposal.name} does not converge: tail mass {tail:.3g}",
        achieved_tolerance=tail,
    )


def integrate_real_line(
    func: Callable[[float], float], split_points: Sequence[float] = (0.0,)
) -> float:
    """Integrate a decaying function over the real line, splitting at kinks."""
    knots = sorted(split_points)
    total, error = _quad(func, -np.inf, knots[0])
    for lo, hi in zip(knots[:-1], knots[1:]):
        part, part_err = _quad(func, lo, hi)
        total += part
        error += part_err
    part, part_err = _quad(func, knots[-1], np.inf)
    total += part
    error += part_err
    if not math.isfinite(total):
        raise DivergenceError("integral over the real line is not finite")
    return total


def stationary_moment(
    target: UnnormalizedTarget, fn: Callable[[float], float]
) -> float:
    """Return E_P[fn(X)] under the normalized target by quadrature."""
    center = target.true_mean if target.true_mean is not None else 0.0
    knots = sorted({0.0, float(center)})

    def density(x):
        return float(target.h(x))

    mass = integrate_real_line(density, knots)
    if not mass > 0:
        raise NumericalError(f"target '{target.name}' has no mass")
    moment = integrate_real_line(lambda x: float(fn(x)) * density(x), knots)
    return moment / mass


# ------------------------ Transition Kernels ------------------------
def _folded_normal_exp_moment(mean, std, s):
    """E exp(s|Y|) for Y ~ N(mean, std^2)."""
    mean = np.asarray(mean, dtype=float)
    shift = 0.5 * (s * std) ** 2
    plus = np.exp(s * mean + shift) * stats.norm.cdf(mean / std + s * std)
    minus = np.exp(-s * mean + shift) * stats.norm.cdf(-mean / std + s * std)
    return plus + minus


class TransitionKernel:
    """One-step transition P(x, .) on the real line."""

    name = "kernel"

    def closed_form_pv(self, x, V: LyapunovFunction):
        """Return PV(x) in closed form when the kernel supports it."""
        raise NotImplementedError(f"{self.name} has no closed form PV")

    def expect(self, x: float, fn: Callable[[float], float]) -> float:
        """Return E[fn(X_1) | X_0 = x] by quadrature."""
        raise NotImplementedError

    def sample(self, x: float, rng, size: int):
        """Draw `size` independent copies of X_1 given X_0 = x."""
        raise NotImplementedError


class GaussianKernel(TransitionKernel):
    """X_1 = coef * x + shift + sqrt(noise_var) * N."""

    name = "gaussian"

    def __init__(self, coef: float, noise_var: float, shift: float = 0.0):
        """Store the linear-Gaussian transition parameters."""
        if not noise_var > 0:
            raise PreconditionError("noise variance must be positive")
        self.coef = coef
        self.noise_var = noise_var
        self.shift = shift
        self.noise_std = math.sqrt(noise_var)

    def mean(self, x):
        """Conditional mean of X_1 given X_0 = x."""
        return self.coef * np.asarray(x, dtype=float) + self.shift

    def logpdf(self, x, y):
        """Transition log-density p(x, y)."""
        return stats.norm.logpdf(y, loc=self.mean(x), scale=self.noise_std)

    def closed_form_pv(self, x, V: LyapunovFunction):
        """PV(x) via Gaussian moments."""
        mean = self.mean(x)
        if V.family == "one_plus_square":
            return 1.0 + np.square(mean) + self.noise_var
        return _folded_normal_exp_moment(mean, self.noise_std, V.s)

    def closed_form_pv_sq(self, x, V: LyapunovFunction):
        """P(V^2)(x) via Gaussian moments up to order four."""
        mean = self.mean(x)
        var = self.noise_var
        if V.family == "one_plus_square":
            second = np.square(mean) + var
            fourth = mean**4 + 6.0 * np.square(mean) * var + 3.0 * var**2
            return 1.0 + 2.0 * second + fourth
        return _folded_normal_exp_moment(mean, self.noise_std, 2.0 * V.s)

    def expect(self, x: float, fn: Callable[[float], float]) -> float:
        """E[fn(X_1) | X_0 = x] by quadrature against the Gaussian density."""
        mean = float(self.mean(x))
        std = self.noise_std

        def weighted(y):
            return float(fn(y)) * math.exp(
                -0.5 * ((y - mean) / std) ** 2
            ) / (std * math.sqrt(2.0 * math.pi))

        return integrate_real_line(weighted, sorted({0.0, mean}))

    def sample(self, x: float, rng, size: int):
        """Draw copies of X_1."""
        return float(self.mean(x)) + self.noise_std * rng.standard_normal(size)


class AR1Kernel(GaussianKernel):
    """Contracting normal chain X_k = 0.5 X_{k-1} + sqrt(3/4) N_k."""

    name = "ar1"

    def __init__(self, coef: float = 0.5, noise_var: float = 0.75):
        """Default to the stationary standard normal toy chain."""
        super().__init__(coef, noise_var)


class IIDKernel(GaussianKernel):
    """X_1 ~ N(mean, var) independently of X_0."""

    name = "iid"

    def __init__(self, mean: float = 0.0, var: float = 1.0):
        """Independent Gaussian draws."""
        super().__init__(0.0, var, shift=mean)


class MetropolisKernel(TransitionKernel):
    """Random Walk Metropolis transition for a target and symmetric proposal."""

    name = "rwm"

    def __init__(self, target: UnnormalizedTarget, proposal: SymmetricProposal):
        """Store the target and proposal."""
        self.target = target
        self.proposal = proposal

    def acceptance(self, x: float, z):
        """Acceptance probability min(1, h(x+z)/h(x))."""
        log_ratio = self.target.log_h(x + np.asarray(z)) - self.target.log_h(x)
        return np.exp(np.minimum(0.0, log_ratio))

    def expect(self, x: float, fn: Callable[[float], float]) -> float:
        """E[fn(X_1) | X_0 = x] including the rejection atom at x."""
        stay = float(fn(x))

        def integrand(z):
            a = float(self.acceptance(x, z))
            return a * float(fn(x + z)) + (1.0 - a) * stay

        return expectation_under_proposal(self.proposal, integrand)

    def sample(self, x: float, rng, size: int):
        """Draw copies of X_1."""
        z = self.proposal.sample(rng, size)
        u = rng.random(size)
        accept = u <= self.acceptance(x, z)
        return np.where(accept, x + z, x)


# ------------------------ Hypothesis Checks ------------------------
def default_check_grid(
    x1: float = 0.0,
    points: int = DEFAULT_GRID_POINTS,
    span: float = DEFAULT_GRID_SPAN,
) -> np.ndarray:
    """Symmetric log-spaced grid with all |x| > x1."""
    half = np.abs(x1) + np.geomspace(1e-3, span, points // 2)
    return np.concatenate([-half[::-1], half])


def check_log_concavity(
    target: UnnormalizedTarget,
    grid: Sequence[float],
    alpha: Optional[float] = None,
    x1: Optional[float] = None,
    tolerance: float = 1e-9,
) -> LogConcavityReport:
    """Check h(y)/h(x) <= exp(-alpha(|y|-|x|)) for same-tail pairs |y|>|x|>x1."""
    alpha = target.tail_decay_alpha if alpha is None else alpha
    x1 = target.tail_threshold_x1 if x1 is None else x1
    if alpha is None or x1 is None:
        raise ConfigurationError("target declares no tail parameters", "model.target")
    points = np.asarray(grid, dtype=float).reshape(-1)
    if points.size == 0:
        raise ConfigurationError("log-concavity grid is empty", "grid")
    if not np.all(np.isfinite(points)):
        raise ConfigurationError("log-concavity grid has non-finite points", "grid")
    if np.any(np.abs(points) <= x1):
        raise ConfigurationError(f"grid points must satisfy |x| > x1={x1}", "grid")
    log_h = target.checked_log_h(points)

    worst = -np.inf
    worst_pair = None
    worst_ratio = -np.inf
    pairs = 0
    for sign in (-1.0, 1.0):
        side = np.sign(points) == sign
        if np.count_nonzero(side) < 2:
            continue
        radius = np.abs(points[side])
        order = np.argsort(radius)
        radius = radius[order]
        values = log_h[side][order]
        # excess[i, j] for |x_j| > |x_i|:
        #   log h(x_j) - log h(x_i) + alpha (|x_j| - |x_i|)
        gap = radius[None, :] - radius[:, None]
        excess = values[None, :] - values[:, None] + alpha * gap
        valid = gap > 0
        pairs += int(np.count_nonzero(valid))
        if not valid.any():
            continue
        masked = np.where(valid, excess, -np.inf)
        i, j = np.unravel_index(np.argmax(masked), masked.shape)
        if masked[i, j] > worst:
            worst = float(masked[i, j])
            worst_pair = (float(sign * radius[i]), float(sign * radius[j]))
            worst_ratio = float(
                np.exp(values[j] - values[i]) - np.exp(-alpha * gap[i, j])
            )

    return LogConcavityReport(
        passed=bool(worst <= tolerance),
        alpha=float(alpha),
        x1=float(x1),
        max_log_excess=float(worst),
        max_ratio_excess=float(worst_ratio),
        worst_pair=worst_pair,
        pairs_checked=pairs,
    )


def check_symmetry(
    proposal: SymmetricProposal, grid: Optional[Sequence[float]] = None,
    tolerance: float = 1e-12,
) -> GridCheckReport:
    """Check log q(z) = log q(-z) on a grid."""
    points = default_check_grid() if grid is None else np.asarray(grid, dtype=float)
    deviation = np.abs(proposal.log_q(points) - proposal.log_q(-points))
    idx = int(np.argmax(deviation))
    return GridCheckReport(
        name="symmetry",
        passed=bool(deviation[idx] <= tolerance),
        max_deviation=float(deviation[idx]),
        worst_point=float(points[idx]),
    )


def check_normalization(
    proposal: SymmetricProposal, tolerance: float = 1e-8
) -> GridCheckReport:
    """Check that q integrates to one."""
    mass = expectation_under_proposal(proposal, lambda z: 1.0)
    deviation = abs(mass - 1.0)
    return GridCheckReport(
        name="normalization",
        passed=bool(deviation <= tolerance),
        max_deviation=deviation,
        details={"mass": mass},
    )


def check_envelope(
    proposal: SymmetricProposal, grid: Optional[Sequence[float]] = None,
    tolerance: float = 1e-12,
) -> GridCheckReport:
    """Check q(x) <= C exp(-alpha |x|) on a grid (in log space)."""
    points = default_check_grid() if grid is None else np.asarray(grid, dtype=float)
    bound = math.log(proposal.envelope_C) - proposal.decay_alpha * np.abs(points)
    excess = proposal.log_q(points) - bound
    idx = int(np.argmax(excess))
    return GridCheckReport(
        name="envelope",
        passed=bool(excess[idx] <= tolerance),
        max_deviation=float(excess[idx]),
        worst_point=float(points[idx]),
    )


def verify_drift(
    kernel: TransitionKernel,
    V: LyapunovFunction,
    beta: float,
    b: float,
    check_points: Sequence[float],
    method: DriftMethod = DriftMethod.QUADRATURE,
    tolerance: Optional[float] = None,
    rng=None,
    mc_draws: int = 100_000,
) -> DriftCheckReport:
    """Verify PV(x) <= beta V(x) + b on the check points.

    Closed-form and quadrature checks pass when the largest violation is at
    most `tolerance` (default 1e-8). The Monte-Carlo check passes when every
    point's estimate is within three standard errors of the bound.
    """
    if not 0.0 < beta < 1.0:
        raise PreconditionError(f"beta={beta} must lie in (0, 1)", "beta")
    if not b > 0.0:
        raise PreconditionError(f"b={b} must be positive", "b")
    points = np.asarray(check_points, dtype=float).reshape(-1)
    if points.size == 0:
        raise ConfigurationError("no drift check points", "check_points")
    method = DriftMethod(method)
    bound = beta * V.eval(points) + b
    errors = None

    if method is DriftMethod.CLOSED_FORM:
        pv = np.asarray(kernel.closed_form_pv(points, V), dtype=float)
        tolerance = 1e-8 if tolerance is None else tolerance
        slack = pv - bound
    elif method is DriftMethod.QUADRATURE:
        pv = np.array([kernel.expect(float(x), V.eval) for x in points])
        tolerance = 1e-8 if tolerance is None else tolerance
        slack = pv - bound
    else:
        if rng is None:
            raise ConfigurationError("Monte-Carlo drift check needs an RNG", "rng")
        pv = np.empty(points.size)
        se = np.empty(points.size)
        for i, x in enumerate(points):
            values = V.eval(kernel.sample(float(x), rng, mc_draws))
            pv[i] = values.mean()
            se[i] = values.std(ddof=1) / math.sqrt(mc_draws)
        errors = se.tolist()
        tolerance = 3.0 if tolerance is None else tolerance
        slack = pv - bound - tolerance * se

    if not np.all(np.isfinite(pv)):
        raise NumericalError("PV evaluation produced non-finite values")
    violation = pv - bound
    idx = int(np.argmax(violation))
    passed = bool(np.max(slack) <= (0.0 if errors is not None else tolerance))
    return DriftCheckReport(
        beta=beta,
        b=b,
        max_violation=float(violation[idx]),
        method=method,
        tolerance=float(tolerance),
        passed=passed,
        worst_point=float(points[idx]),
        standard_errors=errors,
    )
