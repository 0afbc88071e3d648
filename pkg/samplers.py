"""
samplers.py - the chains: Random Walk Metropolis, regenerative Metropolis,
rejection sampling, the AR(1) toy chain and iid draws.

Part of the mcmc-certify project.

Every sampler takes a numpy Generator obtained from an RngStream, so the
same (seed, stream_id) always reproduces the same trajectory. Acceptance
ratios are computed in log space.
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

# Third-party Imports
import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

# Local Application/Library-specific Imports
from errors import ConfigurationError, EnvelopeError, NumericalError, PreconditionError
from models import (
    LyapunovFunction,
    SymmetricProposal,
    UnnormalizedTarget,
    default_check_grid,
)
from reporting import log_debug

# ------------------------ Constants ------------------------
AR1_COEF = 0.5
AR1_NOISE_STD = math.sqrt(0.75)
MAX_STALL = 10**7
MAX_SEED = 2**64
ENVELOPE_TOL = 1e-12
REJECTION_BLOCK = 4096


class ChainKind(Enum):
    """Supported chains."""

    RWM = "rwm"
    REGENERATIVE = "regenerative"
    REJECTION = "rejection"
    AR1 = "ar1"
    IID = "iid"

    @classmethod
    def parse(cls, name: str) -> "ChainKind":
        """Accept the short command-line aliases too."""
        aliases = {"regen": cls.REGENERATIVE, "reject": cls.REJECTION}
        if name in aliases:
            return aliases[name]
        try:
            return cls(name)
        except ValueError:
            raise ConfigurationError(f"unknown chain kind {name!r}", "experiment.kind")


# ------------------------ Domain Types ------------------------
@dataclass(frozen=True)
class RngStream:
    """Seed plus stream id; distinct ids give independent PCG64 streams."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        """Validate the 64-bit ranges."""
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not 0 <= int(value) < MAX_SEED:
                raise ConfigurationError(
                    f"{name}={value} must be a 64-bit unsigned integer",
                    f"experiment.{name}",
                )

    def generator(self) -> np.random.Generator:
        """Create the Generator for this stream."""
        sequence = np.random.SeedSequence(
            int(self.seed), spawn_key=(int(self.stream_id),)
        )
        return np.random.Generator(np.random.PCG64(sequence))


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Shorthand for RngStream(seed, stream_id).generator()."""
    return RngStream(seed, stream_id).generator()


@dataclass
class Trajectory:
    """A realized chain with its Lyapunov values and step counters."""

    states: np.ndarray
    v_values: np.ndarray
    v_sq_values: np.ndarray
    total_inner_steps: int
    kind: ChainKind
    regeneration_count: int = 0
    regeneration_flags: Optional[np.ndarray] = None
    rejected_nonfinite: int = 0

    @property
    def n(self) -> int:
        """Number of recorded states."""
        return int(self.states.size)

    @property
    def accepted_fraction(self) -> float:
        """States per inner step (1 for rwm and ar1)."""
        if self.total_inner_steps == 0:
            return 0.0
        return self.n / self.total_inner_steps


def make_trajectory(
    kind: ChainKind,
    states,
    V: Optional[LyapunovFunction],
    total_inner_steps: int,
    **counters,
) -> Trajectory:
    """Build a Trajectory, evaluating V and V^2 on the states."""
    states = np.asarray(states, dtype=float).reshape(-1)
    if V is None:
        v_values = np.full(states.size, np.nan)
        v_sq_values = np.full(states.size, np.nan)
    else:
        v_values = np.asarray(V.eval(states), dtype=float)
        v_sq_values = np.asarray(V.eval_sq(states), dtype=float)
    return Trajectory(
        states=states,
        v_values=v_values,
        v_sq_values=v_sq_values,
        total_inner_steps=int(total_inner_steps),
        kind=kind,
        **counters,
    )


@dataclass
class RegenState:
    """State of the regenerative sampler: the atom or a point x."""

    x: Optional[float]
    in_atom: bool
    log_h_x: float = float("nan")

    @classmethod
    def atom(cls) -> "RegenState":
        """The initial state A=1."""
        return cls(None, True)


@dataclass
class RegenStep:
    """Outcome of one regenerative iteration."""

    state: RegenState
    emitted: Optional[float]
    regenerated: bool
    entered_atom: bool


@dataclass
class BatchRun:
    """Lock-step run of independent regenerative chains."""

    states: np.ndarray
    regeneration_flags: np.ndarray
    total_inner_steps: np.ndarray
    regeneration_counts: np.ndarray


# ------------------------ Random Walk Metropolis ------------------------
def _metropolis_move(x, log_h_x, z, u, target):
    """Return (new state, its log h, nonfinite flag) for one RWM move."""
    y = x + z
    log_h_y = float(target.log_h(y))
    if not math.isfinite(log_h_y):
        return x, log_h_x, True
    if u <= math.exp(min(0.0, log_h_y - log_h_x)):
        return y, log_h_y, False
    return x, log_h_x, False


def rwm_step(
    x: float, target: UnnormalizedTarget, proposal: SymmetricProposal, rng
) -> float:
    """One Metropolis step: draw Z then U, accept x+Z if U <= h(x+Z)/h(x)."""
    log_h_x = float(target.checked_log_h(x))
    z = float(proposal.sample(rng))
    u = float(rng.random())
    return float(_metropolis_move(x, log_h_x, z, u, target)[0])


def rwm_run(
    n: int,
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    rng,
    initial: float = 0.0,
    V: Optional[LyapunovFunction] = None,
) -> Trajectory:
    """Run n Metropolis steps from `initial`; the states are X_1..X_n."""
    z = np.asarray(proposal.sample(rng, n), dtype=float)
    u = rng.random(n)
    states = np.empty(n)
    x = float(initial)
    log_h_x = float(target.checked_log_h(x))
    nonfinite = 0
    for k in range(n):
        x, log_h_x, bad = _metropolis_move(x, log_h_x, z[k], u[k], target)
        nonfinite += bad
        states[k] = x
    return make_trajectory(
        ChainKind.RWM, states, V, n, rejected_nonfinite=nonfinite
    )


# ------------------------ Regenerative Metropolis ------------------------
def _atom_entry_probability(y, log_h_y, proposal) -> float:
    """q(y)/h(y) capped at 1."""
    return math.exp(min(0.0, float(proposal.log_q(y)) - log_h_y))


def regen_step(
    state: RegenState,
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    rng,
) -> RegenStep:
    """One iteration of the regenerative Metropolis algorithm.

    Outside the atom: a Metropolis move to Y, kept unless U' <= q(Y)/h(Y) ^ 1.
    Entering the atom falls through to a re-entry draw in the same iteration.
    In the atom: Z ~ q is accepted as the next state when U' < h(Z)/q(Z).
    """
    entered = False
    if not state.in_atom:
        z = float(proposal.sample(rng))
        u = float(rng.random())
        u_exit = float(rng.random())
        y, log_h_y, _ = _metropolis_move(state.x, state.log_h_x, z, u, target)
        if u_exit > _atom_entry_probability(y, log_h_y, proposal):
            return RegenStep(RegenState(y, False, log_h_y), y, False, False)
        entered = True

    u_enter = float(rng.random())
    z = float(proposal.sample(rng))
    log_h_z = float(target.log_h(z))
    if math.isfinite(log_h_z) and u_enter < math.exp(
        min(0.0, log_h_z - float(proposal.log_q(z)))
    ):
        return RegenStep(RegenState(z, False, log_h_z), z, True, entered)
    return RegenStep(RegenState.atom(), None, False, entered)


def regen_metropolis_run(
    n: Optional[int],
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    rng,
    V: Optional[LyapunovFunction] = None,
    budget: Optional[int] = None,
    max_stall: int = MAX_STALL,
) -> Trajectory:
    """Run the regenerative sampler from the atom.

    Stops after n accepted states, or after `budget` inner iterations when a
    budget is given (whichever comes first).
    """
    if n is None and budget is None:
        raise ConfigurationError("either n or budget is required", "experiment.n")
    state = RegenState.atom()
    regenerations = 1
    steps = 0
    stall = 0
    states: List[float] = []
    flags: List[bool] = []
    while (n is None or len(states) < n) and (budget is None or steps < budget):
        step = regen_step(state, target, proposal, rng)
        steps += 1
        regenerations += step.entered_atom
        state = step.state
        if step.emitted is None:
            stall += 1
            if stall >= max_stall:
                raise NumericalError(
                    f"regenerative sampler stalled in the atom for {stall} "
                    "iterations; check the scales of h and q"
                )
            continue
        stall = 0
        states.append(step.emitted)
        flags.append(step.regenerated)
    return make_trajectory(
        ChainKind.REGENERATIVE,
        states,
        V,
        steps,
        regeneration_count=regenerations,
        regeneration_flags=np.asarray(flags, dtype=bool),
    )


def regen_metropolis_batch(
    n: int,
    reps: int,
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    rng,
    max_stall: int = MAX_STALL,
) -> BatchRun:
    """Run `reps` regenerative chains in lock step until each has n states."""
    states = np.empty((reps, n))
    flags = np.zeros((reps, n), dtype=bool)
    count = np.zeros(reps, dtype=np.int64)
    steps = np.zeros(reps, dtype=np.int64)
    regenerations = np.ones(reps, dtype=np.int64)
    stall = np.zeros(reps, dtype=np.int64)
    x = np.zeros(reps)
    log_h_x = np.zeros(reps)
    in_atom = np.ones(reps, dtype=bool)
    rows = np.arange(reps)

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        while np.any(count < n):
            active = count < n
            steps += active
            out = active & ~in_atom

            z = np.asarray(proposal.sample(rng, reps), dtype=float)
            u = rng.random(reps)
            u_exit = rng.random(reps)
            y = x + z
            log_h_y = np.asarray(target.log_h(y), dtype=float)
            move = out & np.isfinite(log_h_y) & (
                u <= np.exp(np.minimum(0.0, log_h_y - log_h_x))
            )
            y = np.where(move, y, x)
            log_h_y = np.where(move, log_h_y, log_h_x)
            entry = np.exp(np.minimum(0.0, proposal.log_q(y) - log_h_y))
            enter = out & (u_exit <= entry)
            stay_out = out & ~enter

            idx = rows[stay_out]
            states[idx, count[idx]] = y[stay_out]
            count[idx] += 1
            x = np.where(stay_out, y, x)
            log_h_x = np.where(stay_out, log_h_y, log_h_x)
            regenerations += enter
            in_atom |= enter

            atom = active & in_atom
            u_enter = rng.random(reps)
            z_new = np.asarray(proposal.sample(rng, reps), dtype=float)
            log_h_z = np.asarray(target.log_h(z_new), dtype=float)
            accept = atom & np.isfinite(log_h_z) & (
                u_enter < np.exp(np.minimum(0.0, log_h_z - proposal.log_q(z_new)))
            )
            idx = rows[accept]
            states[idx, count[idx]] = z_new[accept]
            flags[idx, count[idx]] = True
            count[idx] += 1
            x = np.where(accept, z_new, x)
            log_h_x = np.where(accept, log_h_z, log_h_x)
            in_atom &= ~accept

            stall = np.where(stay_out | accept | ~active, 0, stall + 1)
            if np.any(stall >= max_stall):
                raise NumericalError(
                    f"regenerative chain stalled in the atom for {max_stall} iterations"
                )
    return BatchRun(states, flags, steps, regenerations)


# ------------------------ Regeneration Tours ------------------------
@dataclass
class TourComparison:
    """Odd- against even-indexed regeneration tours of one trajectory."""

    tours: int
    odd_mean: float
    even_mean: float
    mean_gap_se: float
    ks_statistic: float
    ks_pvalue: float

    @property
    def z_score(self) -> float:
        """Mean gap in standard errors."""
        gap = abs(self.odd_mean - self.even_mean)
        if self.mean_gap_se == 0.0:
            return 0.0 if gap == 0.0 else math.inf
        return gap / self.mean_gap_se


def regeneration_tours(traj: Trajectory, g=None) -> np.ndarray:
    """Sum of g over each complete tour; a tour starts at a re-entry draw.

    The tour still open at the end of the run is dropped.
    """
    if traj.regeneration_flags is None:
        raise ConfigurationError(
            f"{traj.kind.value} trajectory has no regeneration markers", "trajectory"
        )
    starts = np.flatnonzero(np.asarray(traj.regeneration_flags, dtype=bool))
    if starts.size < 2:
        return np.empty(0)
    values = traj.states if g is None else np.asarray(g(traj.states), dtype=float)
    sums = np.add.reduceat(values[starts[0]:], starts - starts[0])
    return sums[:-1]


def compare_alternate_tours(traj: Trajectory, g=None) -> TourComparison:
    """Compare tour sums at odd and even positions; iid tours make them alike."""
    sums = regeneration_tours(traj, g)
    if sums.size < 4:
        raise ConfigurationError(
            f"need at least 4 complete regeneration tours, got {sums.size}",
            "experiment.n",
        )
    odd, even = sums[0::2], sums[1::2]
    gap_se = math.sqrt(odd.var(ddof=1) / odd.size + even.var(ddof=1) / even.size)
    ks = stats.ks_2samp(odd, even)
    log_debug(
        f"{sums.size} regeneration tours: odd mean {odd.mean():.6g}, "
        f"even mean {even.mean():.6g}, KS p={ks.pvalue:.3g}"
    )
    return TourComparison(
        tours=int(sums.size),
        odd_mean=float(odd.mean()),
        even_mean=float(even.mean()),
        mean_gap_se=float(gap_se),
        ks_statistic=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
    )


# ------------------------ Rejection Sampling ------------------------
def optimal_envelope(
    target: UnnormalizedTarget, proposal: SymmetricProposal, span: float = 50.0
) -> float:
    """M = sup h/q, located on a grid and refined by bounded minimization."""

    def log_ratio(x):
        return target.log_h(x) - proposal.log_q(x)

    grid = np.linspace(-span, span, 20001)
    values = np.asarray(log_ratio(grid), dtype=float)
    idx = int(np.argmax(values))
    best = float(values[idx])
    if 0 < idx < grid.size - 1:
        result = minimize_scalar(
            lambda x: -float(log_ratio(x)),
            bounds=(grid[idx - 1], grid[idx + 1]),
            method="bounded",
            options={"xatol": 1e-10},
        )
        best = max(best, -float(result.fun))
    return math.exp(best)


def rejection_sample(
    n: Optional[int],
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    envelope_M: float,
    rng,
    V: Optional[LyapunovFunction] = None,
    budget: Optional[int] = None,
    max_proposals: int = 10**9,
) -> Trajectory:
    """Accept-reject draws from h with envelope M q.

    Proposals are drawn in blocks. With a budget exactly `budget` proposals
    are consumed; otherwise sampling stops at the n-th acceptance.
    """
    if not envelope_M > 0:
        raise PreconditionError(f"envelope M={envelope_M} must be positive", "M")
    if n is None and budget is None:
        raise ConfigurationError("either n or budget is required", "experiment.n")
    log_M = math.log(envelope_M)
    grid = default_check_grid()
    grid_excess = target.log_h(grid) - log_M - proposal.log_q(grid)
    if np.max(grid_excess) > ENVELOPE_TOL:
        bad = float(grid[int(np.argmax(grid_excess))])
        raise EnvelopeError(f"M q < h at x={bad!r}", x=bad)

    accepted: List[np.ndarray] = []
    have = 0
    consumed = 0
    while (n is None or have < n) and (budget is None or consumed < budget):
        block = REJECTION_BLOCK if budget is None else min(
            REJECTION_BLOCK, budget - consumed
        )
        z = np.asarray(proposal.sample(rng, block), dtype=float)
        u = rng.random(block)
        log_ratio = target.log_h(z) - log_M - proposal.log_q(z)
        if np.max(log_ratio) > ENVELOPE_TOL:
            bad = float(z[int(np.argmax(log_ratio))])
            raise EnvelopeError(f"M q < h at proposal x={bad!r}", x=bad)
        keep = u <= np.exp(log_ratio)
        if n is not None and have + np.count_nonzero(keep) >= n:
            # stop at the proposal that delivered the n-th acceptance
            last = int(np.flatnonzero(keep)[n - have - 1])
            keep[last + 1:] = False
            block = last + 1
        accepted.append(z[:block][keep[:block]])
        have += int(np.count_nonzero(keep[:block]))
        consumed += block
        if consumed >= max_proposals:
            raise NumericalError(f"rejection sampler used {consumed} proposals")
    states = np.concatenate(accepted) if accepted else np.empty(0)
    log_debug(f"rejection sampler: {states.size} accepted of {consumed} proposals")
    return make_trajectory(ChainKind.REJECTION, states, V, consumed)


# ------------------------ AR(1) and iid chains ------------------------
def ar1_step(x: float, rng) -> float:
    """Return 0.5 x + sqrt(3/4) N."""
    return AR1_COEF * x + AR1_NOISE_STD * float(rng.standard_normal())


def ar1_paths(
    n: int,
    reps: int,
    rng,
    initial: float = 0.0,
    stationary: bool = False,
) -> np.ndarray:
    """Simulate `reps` AR(1) paths X_1..X_n as a (reps, n) array.

    A stationary start draws X_0 ~ N(0, 1) for every path.
    """
    x0 = rng.standard_normal(reps) if stationary else np.full(reps, float(initial))
    noise = AR1_NOISE_STD * rng.standard_normal((reps, n))
    if n == 0:
        return noise
    zi = (AR1_COEF * x0)[:, None]
    paths, _ = lfilter([1.0], [1.0, -AR1_COEF], noise, axis=1, zi=zi)
    return paths


def ar1_run(
    n: int,
    rng,
    initial: float = 0.0,
    stationary: bool = False,
    V: Optional[LyapunovFunction] = None,
) -> Trajectory:
    """Single AR(1) trajectory."""
    states = ar1_paths(n, 1, rng, initial, stationary)[0]
    return make_trajectory(ChainKind.AR1, states, V, n)


def iid_paths(n: int, reps: int, rng, mean: float = 0.0, std: float = 1.0):
    """Independent N(mean, std^2) draws as a (reps, n) array."""
    return mean + std * rng.standard_normal((reps, n))


# ------------------------ Driver ------------------------
def run_chain(
    kind,
    n: int,
    rng,
    target: Optional[UnnormalizedTarget] = None,
    proposal: Optional[SymmetricProposal] = None,
    V: Optional[LyapunovFunction] = None,
    initial: float = 0.0,
    stationary: bool = False,
    envelope_M: Optional[float] = None,
    budget: Optional[int] = None,
) -> Trajectory:
    """Run any supported chain and record V and V^2 along it.

    `stationary` starts ar1 from N(0, 1) and rwm from one exact rejection draw
    of the target (which needs an envelope M q >= h); the regenerative chain
    always starts from the atom.
    """
    kind = ChainKind.parse(kind) if isinstance(kind, str) else ChainKind(kind)
    if n is not None and n < 0:
        raise ConfigurationError(f"n={n} must be nonnegative", "experiment.n")
    if kind in (ChainKind.RWM, ChainKind.REGENERATIVE, ChainKind.REJECTION):
        if target is None or proposal is None:
            raise ConfigurationError(
                f"{kind.value} needs a target and a proposal", "model"
            )
    if n == 0 and budget is None:
        return make_trajectory(kind, [], V, 0)

    if kind is ChainKind.RWM:
        if stationary:
            M = optimal_envelope(target, proposal) if envelope_M is None else envelope_M
            initial = float(rejection_sample(1, target, proposal, M, rng).states[0])
        return rwm_run(n, target, proposal, rng, initial, V)
    if kind is ChainKind.REGENERATIVE:
        return regen_metropolis_run(n, target, proposal, rng, V, budget)
    if kind is ChainKind.REJECTION:
        M = optimal_envelope(target, proposal) if envelope_M is None else envelope_M
        return rejection_sample(n, target, proposal, M, rng, V, budget)
    if kind is ChainKind.AR1:
        return ar1_run(n, rng, initial, stationary, V)
    return make_trajectory(ChainKind.IID, iid_paths(n, 1, rng)[0], V, n)
