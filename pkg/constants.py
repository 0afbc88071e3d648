"""
constants.py - explicit drift/minorization constants and the constant K.

Part of the mcmc-certify project.

Given a drift condition PV <= beta V + b and a minorization constant c(R)
on the small set {V <= R}, the contraction factor is
beta_bar(R) = beta + 2b/(1+R) and the weak-dependence sum is bounded by

    K = (1 + beta_bar ((R-1)/c - R)) / (1 - beta_bar)          (standard)
    K = (1 + 2 beta_bar ((R-1)/c - R)) / (1 - beta_bar)        (doubled)

Both variants are always computed; certificates default to standard.
"""
# ------------------------ Imports ------------------------
# Standard Library Imports
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

# Third-party Imports
import numpy as np
from scipy import stats
from scipy.optimize import minimize_scalar

# Local Application/Library-specific Imports
from errors import CertificateInvalidError, NumericalError, PreconditionError
from models import (
    LyapunovFunction,
    SymmetricProposal,
    UnnormalizedTarget,
    exp_abs,
    expectation_under_proposal,
)
from reporting import log_debug, log_warning

# ------------------------ Constants ------------------------
AR1_BETA = 0.25
AR1_B = 1.5
SCAN_POINTS = 64
REFINE_REL_TOL = 1e-4
MIN_RESOLUTION = 64


class Provenance(Enum):
    """How a certificate field was obtained."""

    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"
    REFERENCE_VALUE = "reference_value"


class KVariant(Enum):
    """Which form of the constant K is used."""

    STANDARD = "standard"
    DOUBLED = "doubled"

    @classmethod
    def _missing_(cls, value):
        """Accept the eq4/sec4 spellings used on the command line."""
        return {"eq4": cls.STANDARD, "sec4": cls.DOUBLED}.get(value)


# ------------------------ Domain Types ------------------------
@dataclass
class DriftCertificate:
    """Drift/minorization constants and the resulting K."""

    beta: float
    b: float
    R: float
    c_R: float
    beta_bar: float
    K: float
    K_variant: float
    R0: float = 1.0
    provenance: Dict[str, Provenance] = field(default_factory=dict)
    label: str = ""

    def K_for(self, variant="standard") -> float:
        """Return K for the requested variant."""
        return self.K if KVariant(variant) is KVariant.STANDARD else self.K_variant


def certificate_to_dict(cert: DriftCertificate) -> Dict[str, object]:
    """JSON-ready record with per-field provenance tags."""
    record = asdict(cert)
    record["K_standard"] = record.pop("K")
    record["K_doubled"] = record.pop("K_variant")
    record["provenance"] = {
        key: Provenance(value).value for key, value in cert.provenance.items()
    }
    return record


# ------------------------ Drift Constants ------------------------
def minimal_R(beta: float, b: float) -> float:
    """Smallest R with beta + 2b/(1+R) = 1."""
    return 2.0 * b / (1.0 - beta) - 1.0


def beta_bar(beta: float, b: float, R: float) -> float:
    """Return beta + 2b/(1+R), failing when the result is not below one."""
    if not 0.0 < beta < 1.0:
        raise PreconditionError(f"beta={beta} must lie in (0, 1)", "beta")
    if not b > 0.0:
        raise PreconditionError(f"b={b} must be positive", "b")
    if not R >= 1.0:
        raise PreconditionError(f"R={R} must be at least 1", "R")
    value = beta + 2.0 * b / (1.0 + R)
    if value >= 1.0:
        needed = minimal_R(beta, b)
        raise CertificateInvalidError(
            f"beta_bar={value:.6g} >= 1 at R={R:.6g}; need R > {needed:.6g}",
            beta_bar=value,
            minimal_R=needed,
        )
    return value


def regen_drift_constants(
    s: float, proposal: SymmetricProposal, x1: float, power: int = 1
) -> Tuple[float, float]:
    """(beta, b) of the regenerative Metropolis drift for V(x)^power, V = exp(s|x|).

    beta = (E_q[exp((p s - alpha)|Z|)] + 1) / 2 and
    b = V(x1)^p E_q[V(Z)^p], with alpha the proposal decay.
    """
    alpha = proposal.decay_alpha
    if not s > 0:
        raise PreconditionError(f"s={s} must be positive", "model.lyapunov.s")
    if not alpha > 2.0 * s:
        raise PreconditionError(
            f"proposal decay alpha={alpha} must exceed 2s={2.0 * s}",
            "model.proposal.decay_alpha",
        )
    if power not in (1, 2):
        raise PreconditionError(f"power={power} must be 1 or 2", "power")
    rate = power * s
    contraction = expectation_under_proposal(
        proposal, lambda z: math.exp((rate - alpha) * abs(z))
    )
    moment = expectation_under_proposal(proposal, lambda z: math.exp(rate * abs(z)))
    return 0.5 * (contraction + 1.0), math.exp(rate * x1) * moment


def regen_beta_bar(
    s: float,
    proposal: SymmetricProposal,
    x1: float,
    R: float,
    V: Optional[LyapunovFunction] = None,
) -> float:
    """beta_bar(R) for the regenerative Metropolis chain with V = exp(s|x|)."""
    if V is not None and (V.family != "exp_abs" or V.s != s):
        raise PreconditionError(
            f"V must be exp({s}|x|), got {V.describe()}", "model.lyapunov"
        )
    beta, b = regen_drift_constants(s, proposal, x1)
    return beta_bar(beta, b, R)


# ------------------------ Minorization Constants ------------------------
def minorization_pointwise(
    target: UnnormalizedTarget, proposal: SymmetricProposal, x: float
) -> float:
    """Probability of entering the atom from x outside it.

    E_q[h(x+Z)/h(x) ^ 1] E_q[q(x+Z)/h(x+Z) ^ 1]
        + (1 - E_q[h(x+Z)/h(x) ^ 1]) (q(x)/h(x) ^ 1)
    """
    log_hx = float(target.checked_log_h(x))

    def move(z):
        return math.exp(min(0.0, float(target.log_h(x + z)) - log_hx))

    def enter(z):
        y = x + z
        return math.exp(min(0.0, float(proposal.log_q(y)) - float(target.log_h(y))))

    moved = expectation_under_proposal(proposal, move)
    entered = expectation_under_proposal(proposal, enter)
    stay = math.exp(min(0.0, float(proposal.log_q(x)) - log_hx))
    return min(1.0, moved * entered + (1.0 - moved) * stay)


def minorization_constant_regen(
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    V: LyapunovFunction,
    R: float,
    resolution: int = MIN_RESOLUTION,
    max_rounds: int = 6,
) -> float:
    """Minimum of the atom-entry probability over the small set {V <= R}.

    The grid on [-w, w] doubles (nested) until two successive minima agree
    within 1e-4 relative.
    """
    if resolution < MIN_RESOLUTION:
        raise PreconditionError(
            f"resolution={resolution} must be at least {MIN_RESOLUTION}", "resolution"
        )
    half_width = V.sublevel_half_width(R)
    cache: Dict[float, float] = {}

    def grid_min(points: int) -> float:
        grid = np.linspace(-half_width, half_width, points)
        for x in grid:
            key = float(x)
            if key not in cache:
                cache[key] = minorization_pointwise(target, proposal, key)
        return min(cache[float(x)] for x in grid)

    points = resolution + 1
    previous = grid_min(points)
    for round_index in range(max_rounds):
        points = 2 * points - 1
        current = grid_min(points)
        change = abs(current - previous) / max(abs(current), 1e-300)
        log_debug(
            f"c(R={R:.6g}) refinement {round_index + 1}: {current:.8g} "
            f"({points} points, change {change:.2e})"
        )
        if change <= REFINE_REL_TOL:
            return current
        previous = current
    raise NumericalError(
        f"c(R={R}) did not settle after {max_rounds} refinements",
        achieved_tolerance=change,
    )


def minorization_floor(
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    span: float = 50.0,
    points: int = 20001,
) -> float:
    """inf_x (q(x)/h(x) ^ 1), a lower bound of the atom-entry probability."""

    def log_ratio(x):
        return np.minimum(0.0, proposal.log_q(x) - target.log_h(x))

    grid = np.linspace(-span, span, points)
    values = log_ratio(grid)
    idx = int(np.argmin(values))
    best = float(values[idx])
    if 0 < idx < points - 1:
        result = minimize_scalar(
            lambda x: float(log_ratio(x)),
            bounds=(grid[idx - 1], grid[idx + 1]),
            method="bounded",
            options={"xatol": 1e-10},
        )
        best = min(best, float(result.fun))
    else:
        log_warning(
            f"inf q/h attained at the grid boundary x={grid[idx]:.6g}; "
            "the floor may be lower outside the grid"
        )
    return math.exp(best)


def minorization_constant_toy(d: float) -> Tuple[float, float]:
    """Return (2(Phi(sqrt3 d) - Phi(sqrt3/d)), sqrt(2 + (d^2-1)/4)) for d >= 1."""
    if not d >= 1.0:
        raise PreconditionError(f"d={d} must be at least 1", "experiment.d")
    root3 = math.sqrt(3.0)
    if math.isinf(d):
        return 1.0, math.inf
    c = 2.0 * (stats.norm.cdf(root3 * d) - stats.norm.cdf(root3 / d))
    return float(c), math.sqrt(2.0 + (d * d - 1.0) / 4.0)


def ar1_small_set_constant(half_width: float) -> float:
    """Mass of the pointwise minimum of N(x/2, 3/4) over |x| <= half_width."""
    return float(2.0 * stats.norm.cdf(-half_width / math.sqrt(3.0)))


def ar1_half_width_for(c: float) -> float:
    """Half-width w whose small set {|x| <= w} has minimum mass c."""
    if not 0.0 < c < 1.0:
        raise PreconditionError(f"c={c} must lie in (0, 1)", "c")
    return float(math.sqrt(3.0) * stats.norm.ppf(1.0 - c / 2.0))


# ------------------------ K ------------------------
def K_constant(beta_bar: float, R: float, c: float, variant="standard") -> float:
    """Weak-dependence sum bound K for the chosen variant."""
    variant = KVariant(variant)
    if not beta_bar > 0.0:
        raise PreconditionError(f"beta_bar={beta_bar} must be positive", "beta_bar")
    if beta_bar >= 1.0:
        raise CertificateInvalidError(
            f"beta_bar={beta_bar:.6g} >= 1", beta_bar=beta_bar
        )
    if not 0.0 < c <= 1.0:
        raise PreconditionError(f"c={c} must lie in (0, 1]", "c")
    if not R >= 1.0:
        raise PreconditionError(f"R={R} must be at least 1", "R")
    factor = 1.0 if variant is KVariant.STANDARD else 2.0
    return (1.0 + factor * beta_bar * ((R - 1.0) / c - R)) / (1.0 - beta_bar)


def make_certificate(
    beta: float,
    b: float,
    R: float,
    c: float,
    provenance: Optional[Dict[str, Provenance]] = None,
    label: str = "",
) -> DriftCertificate:
    """Assemble a certificate; fails when beta_bar(R) >= 1."""
    bb = beta_bar(beta, b, R)
    tags = {
        "beta": Provenance.CLOSED_FORM,
        "b": Provenance.CLOSED_FORM,
        "R": Provenance.CLOSED_FORM,
        "c_R": Provenance.CLOSED_FORM,
    }
    tags.update(provenance or {})
    tags["beta_bar"] = Provenance.CLOSED_FORM
    tags["K"] = Provenance.CLOSED_FORM
    tags["K_variant"] = Provenance.CLOSED_FORM
    return DriftCertificate(
        beta=beta,
        b=b,
        R=R,
        c_R=c,
        beta_bar=bb,
        K=K_constant(bb, R, c, KVariant.STANDARD),
        K_variant=K_constant(bb, R, c, KVariant.DOUBLED),
        R0=max(1.0, minimal_R(beta, b)),
        provenance=tags,
        label=label,
    )


def ar1_certificate(R: float) -> DriftCertificate:
    """Certificate for the AR(1) toy chain with V = 1 + x^2 on {V <= R}."""
    if not R > 1.0:
        raise PreconditionError(f"R={R} must exceed 1", "R")
    c = ar1_small_set_constant(math.sqrt(R - 1.0))
    return make_certificate(AR1_BETA, AR1_B, R, c, label="ar1")


def regen_certificate_family(
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    s: float,
    x1: float,
    c_route: str = "floor",
    resolution: int = MIN_RESOLUTION,
) -> Callable[[float], DriftCertificate]:
    """R -> certificate for the regenerative Metropolis chain.

    The "floor" route uses c = inf q/h ^ 1 for every R; the "pointwise" route
    evaluates the atom-entry minimum over {V <= R}.
    """
    if c_route not in ("floor", "pointwise"):
        raise PreconditionError(
            f"unknown c route {c_route!r}", "experiment.c_route"
        )
    beta, b = regen_drift_constants(s, proposal, x1)
    V = exp_abs(s)
    floor = minorization_floor(target, proposal) if c_route == "floor" else None
    memo: Dict[float, float] = {}

    def family(R: float) -> DriftCertificate:
        beta_bar(beta, b, R)
        if floor is not None:
            c, c_tag = floor, Provenance.QUADRATURE
        else:
            if R not in memo:
                memo[R] = minorization_constant_regen(
                    target, proposal, V, R, resolution
                )
            c, c_tag = memo[R], Provenance.QUADRATURE
        return make_certificate(
            beta,
            b,
            R,
            c,
            provenance={
                "beta": Provenance.QUADRATURE,
                "b": Provenance.QUADRATURE,
                "c_R": c_tag,
            },
            label=f"regen/{c_route}",
        )

    return family


def regen_certificate(
    R: float,
    target: UnnormalizedTarget,
    proposal: SymmetricProposal,
    s: float,
    x1: float,
    c_route: str = "floor",
) -> DriftCertificate:
    """Certificate for the regenerative Metropolis chain at level R."""
    return regen_certificate_family(target, proposal, s, x1, c_route)(R)


# ------------------------ Optimization ------------------------
def _scan_grid(R_min: float, R_max: float, scale: str, points: int) -> np.ndarray:
    """Coarse scan grid over [R_min, R_max]."""
    if not R_max > R_min:
        raise PreconditionError(f"empty range [{R_min}, {R_max}]", "experiment.R_max")
    if scale == "log":
        if not R_min > 0:
            raise PreconditionError("log scan needs R_min > 0", "experiment.R_min")
        return np.geomspace(R_min, R_max, points)
    if scale != "linear":
        raise PreconditionError(f"unknown scan scale {scale!r}", "scale")
    return np.linspace(R_min, R_max, points)


def optimize_K_over_R(
    certificate_family: Callable[[float], DriftCertificate],
    R_min: float,
    R_max: float,
    variant="standard",
    scale: str = "linear",
    scan_points: int = SCAN_POINTS,
) -> Tuple[float, float]:
    """Minimize K over R: coarse scan, then golden-section search.

    Invalid certificates count as K = inf. A flat objective returns the
    midpoint of the range.
    """
    variant = KVariant(variant)
    grid = _scan_grid(R_min, R_max, scale, scan_points)
    scanned_beta_bars: List[float] = []

    def objective(R: float) -> float:
        try:
            cert = certificate_family(float(R))
        except CertificateInvalidError as e:
            scanned_beta_bars.append(e.beta_bar if e.beta_bar is not None else math.inf)
            return math.inf
        scanned_beta_bars.append(cert.beta_bar)
        return float(cert.K_for(variant))

    values = np.array([objective(R) for R in grid])
    finite = np.isfinite(values)
    if not finite.any():
        raise CertificateInvalidError(
            f"no valid R in [{R_min}, {R_max}]",
            beta_bar=min(scanned_beta_bars) if scanned_beta_bars else None,
            scanned_beta_bars=scanned_beta_bars[: len(grid)],
        )
    if finite.all() and np.ptp(values) == 0.0:
        midpoint = 0.5 * (R_min + R_max)
        return midpoint, objective(midpoint)

    idx = int(np.argmin(values))
    best_R, best_K = float(grid[idx]), float(values[idx])
    if 0 < idx < len(grid) - 1 and values[idx] < min(values[idx - 1], values[idx + 1]):
        to_R = np.exp if scale == "log" else (lambda u: u)
        from_R = np.log if scale == "log" else (lambda R: R)
        result = minimize_scalar(
            lambda u: objective(float(to_R(u))),
            bracket=(
                float(from_R(grid[idx - 1])),
                float(from_R(grid[idx])),
                float(from_R(grid[idx + 1])),
            ),
            method="golden",
            options={"xtol": 1e-10},
        )
        if np.isfinite(result.fun) and result.fun <= best_K:
            best_R, best_K = float(to_R(result.x)), float(result.fun)
    else:
        log_debug(f"K scan minimum at R={best_R:.6g} is not strictly bracketed")
    return best_R, best_K


def required_runs(K: float) -> float:
    """Run count 100 ln(10) K^2 ln(K) / 2 for a level-0.1 interval."""
    if not K > 1.0:
        raise PreconditionError(f"K={K} must exceed 1", "K")
    return 100.0 * math.log(10.0) * K * K * math.log(K) / 2.0


# ------------------------ Tables ------------------------
def toy_table_rows(d_values: Sequence[float]) -> List[Dict[str, object]]:
    """Rows (d, R, c, beta_bar, K_standard, K_doubled) over a sweep of toy d values.

    d=1 and any d whose certificate is invalid yields a row flagged invalid.
    """
    rows = []
    for d in d_values:
        c, R_paired = minorization_constant_toy(d)
        row: Dict[str, object] = {
            "d": float(d), "R_paired": R_paired, "c": c,
            "R": None, "beta_bar": None, "K_standard": None, "K_doubled": None,
            "valid": False,
        }
        if 0.0 < c < 1.0:
            R = 1.0 + ar1_half_width_for(c) ** 2
            row["R"] = R
            try:
                cert = ar1_certificate(R)
            except CertificateInvalidError as e:
                row["beta_bar"] = e.beta_bar
            else:
                row.update(
                    beta_bar=cert.beta_bar, K_standard=cert.K, K_doubled=cert.K_variant,
                    valid=True,
                )
        rows.append(row)
    return rows


def family_table_rows(
    certificate_family: Callable[[float], DriftCertificate], R_values: Sequence[float]
) -> List[Dict[str, object]]:
    """Rows (R, c, beta_bar, K_standard, K_doubled) over a sweep of R."""
    rows = []
    for R in R_values:
        row: Dict[str, object] = {
            "R": float(R), "c": None, "beta_bar": None,
            "K_standard": None, "K_doubled": None, "valid": False,
        }
        try:
            cert = certificate_family(float(R))
        except CertificateInvalidError as e:
            row["beta_bar"] = e.beta_bar
        else:
            row.update(
                c=cert.c_R, beta_bar=cert.beta_bar,
                K_standard=cert.K, K_doubled=cert.K_variant, valid=True,
            )
        rows.append(row)
    return rows
