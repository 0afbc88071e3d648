"""
coupling.py - Nummelin-split coupling of two AR(1) toy chains.

Part of the mcmc-certify project.

Two copies of X_k = 0.5 X_{k-1} + sqrt(3/4) N_k are run jointly. When both
sit in the small set {|x| <= w} they coalesce with probability c by a common
draw from the minorizing measure nu, and otherwise move by the residual
kernel (P - c nu)/(1 - c). Each coordinate is marginally an AR(1) chain.
The discrepancy d_V(x, y) = (V(x) + V(y)) 1{x != y} summed along the
coupled path estimates the weak-dependence sum bounded by K d_V(x, x').
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional

# Third-party Imports
import numpy as np

# Local Application/Library-specific Imports
from constants import (
    ar1_certificate,
    ar1_half_width_for,
    ar1_small_set_constant,
    minorization_constant_toy,
)
from errors import ConfigurationError, NumericalError, PreconditionError
from models import LyapunovFunction
from reporting import log_warning
from samplers import AR1_COEF, AR1_NOISE_STD, ar1_step

# ------------------------ Constants ------------------------
MAX_ATTEMPTS = 10**6
TRUNCATION_LIMIT = 1e-3
LOG_NORM = math.log(AR1_NOISE_STD * math.sqrt(2.0 * math.pi))
MOVES = ("independent", "synchronous")


# ------------------------ Domain Types ------------------------
@dataclass(frozen=True)
class BivariateState:
    """Pair of coupled states; coalesced is absorbing."""

    x: float
    x_prime: float
    coalesced: bool = False

    @classmethod
    def start(cls, x: float, x_prime: float) -> "BivariateState":
        """Starting pair, flagged coalesced when the points coincide."""
        return cls(float(x), float(x_prime), x == x_prime)


@dataclass(frozen=True)
class SmallSetSpec:
    """Small set {|x| <= half_width} with minorization constant c."""

    c: float
    half_width: float
    d: Optional[float] = None

    def __post_init__(self):
        """Validate the constants."""
        if not 0.0 < self.c < 1.0:
            raise PreconditionError(f"c={self.c} must lie in (0, 1)", "experiment.d")
        if not self.half_width > 0.0:
            raise PreconditionError("small-set half-width must be positive")

    @classmethod
    def from_toy(cls, d: float) -> "SmallSetSpec":
        """Small set whose constant is the toy formula's c for d."""
        c, _ = minorization_constant_toy(d)
        if not 0.0 < c < 1.0:
            raise PreconditionError(f"d={d} gives c={c}; need d > 1", "experiment.d")
        return cls(c, ar1_half_width_for(c), d)

    @classmethod
    def from_level(cls, R: float) -> "SmallSetSpec":
        """Small set {1 + x^2 <= R}."""
        if not R > 1.0:
            raise PreconditionError(f"R={R} must exceed 1", "R")
        w = math.sqrt(R - 1.0)
        return cls(ar1_small_set_constant(w), w)

    @property
    def R(self) -> float:
        """Level of the small set for V = 1 + x^2."""
        return 1.0 + self.half_width**2

    def contains(self, x: float) -> bool:
        """Whether x lies in the small set."""
        return abs(x) <= self.half_width


@dataclass
class WeakDependenceResult:
    """Monte-Carlo estimate of sum_k E d_V(X_k, X_k') with its bound."""

    sum_estimate: float
    se: float
    K: float
    d_v_start: float
    bound_rhs: float
    passed: bool
    truncation_warning: bool
    non_coalesced_fraction: float
    slackness: float
    mean_coalescence_step: float
    mean_first_entry_step: float
    per_step_mean: List[float] = field(default_factory=list)

    def to_dict(self):
        """JSON-ready record."""
        return asdict(self)


# ------------------------ Metric and samplers ------------------------
def d_v_metric(x: float, y: float, V: LyapunovFunction) -> float:
    """(V(x) + V(y)) 1{x != y}."""
    if x == y:
        return 0.0
    return float(V.eval(x) + V.eval(y))


def _transition_logpdf(y: float, mean: float) -> float:
    """Log density of N(mean, 3/4) at y."""
    return -0.5 * ((y - mean) / AR1_NOISE_STD) ** 2 - LOG_NORM


def _endpoint_logpdfs(y: float, small_set: SmallSetSpec):
    """Log densities at y of N(+w/2, 3/4) and N(-w/2, 3/4)."""
    shift = AR1_COEF * small_set.half_width
    return _transition_logpdf(y, shift), _transition_logpdf(y, -shift)


def sample_nu(small_set: SmallSetSpec, rng) -> float:
    """Draw from nu = min(f+, f-)/c by rejection from the mixture (f+ + f-)/2."""
    shift = AR1_COEF * small_set.half_width
    for _ in range(MAX_ATTEMPTS):
        sign = 1.0 if rng.random() < 0.5 else -1.0
        y = sign * shift + AR1_NOISE_STD * float(rng.standard_normal())
        plus, minus = _endpoint_logpdfs(y, small_set)
        low, high = min(plus, minus), max(plus, minus)
        # min / mean of the two densities
        accept = 2.0 / (1.0 + math.exp(high - low))
        if rng.random() < accept:
            return y
    raise NumericalError(f"nu sampler exceeded {MAX_ATTEMPTS} attempts")


def sample_residual(x: float, small_set: SmallSetSpec, rng) -> float:
    """Draw from (P(x, .) - c nu)/(1 - c): propose P(x, .), accept w.p. 1 - min/p."""
    mean = AR1_COEF * x
    for _ in range(MAX_ATTEMPTS):
        y = mean + AR1_NOISE_STD * float(rng.standard_normal())
        plus, minus = _endpoint_logpdfs(y, small_set)
        log_p = _transition_logpdf(y, mean)
        if rng.random() < 1.0 - math.exp(min(0.0, min(plus, minus) - log_p)):
            return y
    raise NumericalError(
        f"residual sampler exceeded {MAX_ATTEMPTS} attempts at x={x!r}",
        achieved_tolerance=small_set.c,
    )


# ------------------------ Coupled chain ------------------------
def coupled_step(
    state: BivariateState,
    small_set: SmallSetSpec,
    rng,
    moves: str = "independent",
) -> BivariateState:
    """Advance the coupled pair by one step; each coordinate moves by P."""
    if moves not in MOVES:
        raise ConfigurationError(
            f"unknown coupling moves {moves!r}", "experiment.coupling_moves"
        )
    if state.coalesced:
        y = ar1_step(state.x, rng)
        return BivariateState(y, y, True)
    if small_set.contains(state.x) and small_set.contains(state.x_prime):
        if rng.random() < small_set.c:
            y = sample_nu(small_set, rng)
            return BivariateState(y, y, True)
        return BivariateState(
            sample_residual(state.x, small_set, rng),
            sample_residual(state.x_prime, small_set, rng),
            False,
        )
    if moves == "synchronous":
        noise = AR1_NOISE_STD * float(rng.standard_normal())
        return BivariateState(
            AR1_COEF * state.x + noise, AR1_COEF * state.x_prime + noise, False
        )
    return BivariateState(ar1_step(state.x, rng), ar1_step(state.x_prime, rng), False)


def estimate_weak_dependence_sum(
    x: float,
    x_prime: float,
    horizon: int,
    reps: int,
    small_set: SmallSetSpec,
    V: LyapunovFunction,
    rng,
    K: Optional[float] = None,
    moves: str = "independent",
) -> WeakDependenceResult:
    """Estimate sum_{k=0}^{horizon} E d_V(X_k, X_k') and compare with K d_V(x, x').

    Replicates stop once coalesced since every later term is zero. K defaults
    to the standard constant of the AR(1) certificate on the small set's level.
    """
    if horizon < 0 or reps < 2:
        raise ConfigurationError(
            "horizon must be nonnegative and reps at least 2", "experiment.horizon"
        )
    K = ar1_certificate(small_set.R).K if K is None else float(K)
    start = d_v_metric(x, x_prime, V)
    totals = np.zeros(reps)
    profile = np.zeros(horizon + 1)
    coalesced_at = np.full(reps, np.nan)
    entered_at = np.full(reps, np.nan)
    open_at_horizon = 0

    for rep in range(reps):
        state = BivariateState.start(x, x_prime)
        total = start
        profile[0] += start
        if state.coalesced:
            coalesced_at[rep] = 0
        for k in range(1, horizon + 1):
            if state.coalesced:
                break
            if np.isnan(entered_at[rep]) and small_set.contains(state.x) and (
                small_set.contains(state.x_prime)
            ):
                entered_at[rep] = k - 1
            state = coupled_step(state, small_set, rng, moves)
            term = d_v_metric(state.x, state.x_prime, V)
            total += term
            profile[k] += term
            if state.coalesced:
                coalesced_at[rep] = k
        open_at_horizon += not state.coalesced
        totals[rep] = total

    estimate = float(totals.mean())
    se = float(totals.std(ddof=1) / math.sqrt(reps))
    fraction = open_at_horizon / reps
    truncated = bool(fraction >= TRUNCATION_LIMIT)
    if truncated:
        log_warning(
            f"{fraction:.2%} of replicates not coalesced by step {horizon}; "
            "the sum is biased low"
        )
    bound = K * start
    return WeakDependenceResult(
        sum_estimate=estimate,
        se=se,
        K=K,
        d_v_start=start,
        bound_rhs=bound,
        passed=bool(estimate - 3.0 * se <= bound),
        truncation_warning=truncated,
        non_coalesced_fraction=fraction,
        slackness=estimate / start if start > 0 else 0.0,
        mean_coalescence_step=float(np.nanmean(coalesced_at))
        if np.any(~np.isnan(coalesced_at)) else math.nan,
        mean_first_entry_step=float(np.nanmean(entered_at))
        if np.any(~np.isnan(entered_at)) else math.nan,
        per_step_mean=(profile / reps).tolist(),
    )
