"""Exact solution of the two-bank, two-asset system.

Both banks hold unit total assets: external assets 1 - theta and a loan of
theta to each other, with equity capital gamma. Price falls v1, v2 are
independent two-sided exponential with rate lambda. Bank n fails initially
when its shock loss exceeds its capital,

    X_n v1 + (1 - X_n) v2 > gamma / (1 - theta),

so every event of interest is a region of the (v1, v2) plane bounded by
straight lines. Bankruptcy-count probabilities have closed forms; the
contagion probability is integrated numerically.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from scipy import integrate

from .cascade import Transmission
from .config import ExperimentConfig, Method
from .errors import InfeasibleTargets, NonConvergence
from .landscape import CellStatus, LandscapeRow, LandscapeTable

logger = logging.getLogger(__name__)

SINGULARITY_TOLERANCE = 1e-6
TRUNCATION_WIDTH = 40.0
QUAD_EPSABS = 1e-13
QUAD_LIMIT = 200
MAX_ERROR = 1e-7


@dataclass(frozen=True)
class AnalyticConfig:
    theta: float
    gamma: float
    rate: float
    x11: float
    x21: float
    transmission: Transmission = Transmission.CAPPED_SHORTFALL

    def __post_init__(self):
        object.__setattr__(self, "transmission", Transmission(self.transmission))
        if not 0 <= self.theta < 1:
            raise ValueError(f"theta must lie in [0, 1), got {self.theta}")
        if self.gamma <= 0 or self.rate <= 0:
            raise ValueError("gamma and the shock rate must be positive")
        if not (0 <= self.x11 <= 1 and 0 <= self.x21 <= 1):
            raise ValueError(
                f"portfolio fractions outside [0, 1]: ({self.x11}, {self.x21})"
            )

    @classmethod
    def from_indices(
        cls,
        theta: float,
        gamma: float,
        rate: float,
        delta: float,
        epsilon: float,
        transmission: Transmission = Transmission.CAPPED_SHORTFALL,
    ) -> "AnalyticConfig":
        """Canonical portfolio of a grid cell: X11 >= X21, X11 + X21 = 1 + epsilon.

        Raises:
            InfeasibleTargets: If delta + epsilon > 1 or either index is negative
        """
        if delta < 0 or epsilon < 0 or delta + epsilon > 1 + 1e-12:
            raise InfeasibleTargets(
                f"(delta, epsilon) = ({delta}, {epsilon}) violates delta + epsilon <= 1"
            )
        x11 = min((1 + epsilon + delta) / 2, 1.0)
        x21 = max((1 + epsilon - delta) / 2, 0.0)
        return cls(theta, gamma, rate, x11, x21, transmission)

    @property
    def threshold(self) -> float:
        """Price fall gamma / (1 - theta) that wipes out a specialized bank."""
        return self.gamma / (1 - self.theta)

    @property
    def loan_threshold(self) -> float:
        """Interbank loan theta in units of external assets."""
        return self.theta / (1 - self.theta)

    @property
    def big_lambda(self) -> float:
        return self.rate * self.threshold

    @property
    def delta(self) -> float:
        return abs(self.x11 - self.x21)

    @property
    def epsilon(self) -> float:
        return abs(self.x11 + self.x21 - 1)

    def swapped(self) -> "AnalyticConfig":
        return AnalyticConfig(
            self.theta, self.gamma, self.rate, self.x21, self.x11, self.transmission
        )


@dataclass(frozen=True)
class HalfPlane:
    """The open half-plane a*v1 + b*v2 + c > 0."""
    a: float
    b: float
    c: float

    def __neg__(self) -> "HalfPlane":
        return HalfPlane(-self.a, -self.b, -self.c)

    def contains(self, v1: float, v2: float) -> bool:
        return self.a * v1 + self.b * v2 + self.c > 0


@dataclass(frozen=True)
class Region:
    """Union of intersections of half-planes."""
    parts: Tuple[Tuple[HalfPlane, ...], ...] = field(default_factory=tuple)

    @classmethod
    def of(cls, *parts: Iterable[HalfPlane]) -> "Region":
        return cls(tuple(tuple(p) for p in parts))

    @classmethod
    def plane(cls) -> "Region":
        return cls(((),))

    def contains(self, v1: float, v2: float) -> bool:
        return any(all(h.contains(v1, v2) for h in part) for part in self.parts)

    def half_planes(self) -> List[HalfPlane]:
        return [h for part in self.parts for h in part]


def _exposure(x: float, shift: float) -> HalfPlane:
    """x*v1 + (1 - x)*v2 > shift."""
    return HalfPlane(x, 1 - x, -shift)


def _joint_exposure(x_i: float, x_j: float, shift: float) -> HalfPlane:
    """s_i + s_j > shift."""
    return HalfPlane(x_i + x_j, 2 - x_i - x_j, -shift)


def fails_initially(config: AnalyticConfig, bank: int) -> HalfPlane:
    """Boundary of bank 1 (bank=0) or bank 2 (bank=1) failing on the shock alone."""
    x = config.x11 if bank == 0 else config.x21
    return _exposure(x, config.threshold)


def psi0(config: AnalyticConfig) -> Region:
    """No bank fails initially."""
    return Region.of([-fails_initially(config, 0), -fails_initially(config, 1)])


def psi1(config: AnalyticConfig) -> Region:
    """Exactly one bank fails initially."""
    first, second = fails_initially(config, 0), fails_initially(config, 1)
    return Region.of([first, -second], [-first, second])


def psi2(config: AnalyticConfig) -> Region:
    """Both banks fail initially."""
    return Region.of([fails_initially(config, 0), fails_initially(config, 1)])


def psi_contagion(config: AnalyticConfig) -> Region:
    """Exactly one bank fails initially and takes the other one down.

    With full_loan the survivor fails once its shock loss exceeds
    gamma - theta. With capped_shortfall it loses min(shortfall, theta):
    a failed bank whose shortfall covers the whole loan acts as under
    full_loan, otherwise the two shock losses together must exceed 2 gamma.
    """
    g, t = config.threshold, config.loan_threshold
    xs = (config.x11, config.x21)
    parts = []
    for failed in (0, 1):
        survivor = 1 - failed
        x_j, x_i = xs[failed], xs[survivor]
        base = [fails_initially(config, failed), -fails_initially(config, survivor)]
        if config.transmission is Transmission.FULL_LOAN:
            parts.append(base + [_exposure(x_i, g - t)])
            continue
        covers_loan = _exposure(x_j, g + t)
        parts.append(base + [covers_loan, _exposure(x_i, g - t)])
        parts.append(base + [-covers_loan, _joint_exposure(x_i, x_j, 2 * g)])
    return Region.of(*parts)


def classify(config: AnalyticConfig, v1: float, v2: float) -> Tuple[int, int]:
    """(|F_0|, |F_inf|) for one shock, read off the regions."""
    if psi2(config).contains(v1, v2):
        return 2, 2
    if psi1(config).contains(v1, v2):
        return (1, 2) if psi_contagion(config).contains(v1, v2) else (1, 1)
    return 0, 0


def _interval_mass(lo: float, hi: float, rate: float) -> float:
    """P(lo < v < hi) for a Laplace(0, 1/rate) variable."""
    if lo >= 0:
        return 0.5 * (math.exp(-rate * lo) - math.exp(-rate * hi))
    if hi <= 0:
        return 0.5 * (math.exp(rate * hi) - math.exp(rate * lo))
    return 1.0 - 0.5 * math.exp(rate * lo) - 0.5 * math.exp(-rate * hi)


def _v2_interval(part: Sequence[HalfPlane], v1: float) -> Optional[Tuple[float, float]]:
    lo, hi = -math.inf, math.inf
    for h in part:
        value = h.a * v1 + h.c
        if h.b == 0:
            if value <= 0:
                return None
        elif h.b > 0:
            lo = max(lo, -value / h.b)
        else:
            hi = min(hi, value / -h.b)
    return (lo, hi) if lo < hi else None


def _section_mass(region: Region, v1: float, rate: float) -> float:
    """P(v2 in the section of the region at v1)."""
    intervals = sorted(
        iv for iv in (_v2_interval(part, v1) for part in region.parts) if iv is not None
    )
    mass = 0.0
    current: Optional[List[float]] = None
    for lo, hi in intervals:
        if current is not None and lo <= current[1]:
            current[1] = max(current[1], hi)
            continue
        if current is not None:
            mass += _interval_mass(current[0], current[1], rate)
        current = [lo, hi]
    if current is not None:
        mass += _interval_mass(current[0], current[1], rate)
    return mass


def _kinks(region: Region, bound: float) -> List[float]:
    """v1 values where the section mass is not smooth."""
    lines, points = [], {0.0}
    for h in region.half_planes():
        if h.b == 0:
            if h.a != 0:
                points.add(-h.c / h.a)
            continue
        # boundary v2 = slope * v1 + intercept
        slope, intercept = -h.a / h.b, -h.c / h.b
        lines.append((slope, intercept))
        if slope != 0:
            points.add(-intercept / slope)
    for k, (s1, i1) in enumerate(lines):
        for s2, i2 in lines[k + 1:]:
            if s1 != s2:
                points.add((i2 - i1) / (s1 - s2))
    return sorted(p for p in points if -bound < p < bound)


def region_probability(region: Region, rate: float) -> Tuple[float, float]:
    """Probability of a region under the product of two Laplace densities.

    The inner integral over v2 is exact; the outer one runs over
    [-V, V] with V = 40 / rate, split at every kink.

    Returns:
        The probability and its error estimate, truncation included

    Raises:
        NonConvergence: If the error estimate exceeds 1e-7
    """
    if rate <= 0:
        raise ValueError("shock rate must be positive")
    bound = TRUNCATION_WIDTH / rate

    def integrand(v1: float) -> float:
        return 0.5 * rate * math.exp(-rate * abs(v1)) * _section_mass(region, v1, rate)

    edges = [-bound, *_kinks(region, bound), bound]
    total, error = 0.0, 4 * math.exp(-rate * bound)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            value, estimate = integrate.quad(
                integrand, lo, hi, epsabs=QUAD_EPSABS, epsrel=0.0, limit=QUAD_LIMIT
            )
            total += value
            error += estimate
    if error > MAX_ERROR:
        raise NonConvergence(
            f"quadrature error estimate {error:.3g} exceeds {MAX_ERROR}",
            error_estimate=error,
        )
    return total, error


def _a_term(x: float, big_lambda: float) -> float:
    if x >= 1:
        return 0.0
    return (x - 1) ** 2 / (2 * (2 * x - 1)) * math.exp(big_lambda / (x - 1))


def _b_term(x: float, big_lambda: float) -> float:
    if x <= 0:
        return 0.0
    return x**2 / (2 * (2 * x - 1)) * math.exp(-big_lambda / x)


def _c_term(x: float) -> float:
    return (x - 1) / (2 * x - 1)


def _near_singular(x: float) -> bool:
    return abs(2 * x - 1) <= SINGULARITY_TOLERANCE


def failure_count_probs(config: AnalyticConfig) -> Tuple[float, float, float]:
    """(p0, p1, p2): probabilities that 0, 1 or 2 banks fail initially.

    Closed forms, valid for X11 >= X21; the banks are relabelled when needed.
    Portfolios within 1e-6 of X = 1/2 are integrated instead.
    """
    high, low = max(config.x11, config.x21), min(config.x11, config.x21)
    if _near_singular(high) or _near_singular(low):
        p1, _ = region_probability(psi1(config), config.rate)
        p2, _ = region_probability(psi2(config), config.rate)
        return 1.0 - p1 - p2, p1, p2

    lam = config.big_lambda
    tail = (_c_term(high) - _c_term(low)) * math.exp(-2 * lam)
    p2 = -_a_term(high, lam) + _b_term(low, lam) - tail / 4
    p1 = (
        _a_term(high, lam)
        + _b_term(high, lam)
        - _a_term(low, lam)
        - _b_term(low, lam)
        + tail / 2
    )
    p0 = -_b_term(high, lam) + _a_term(low, lam) - tail / 4 + 1
    return p0, p1, p2


def contagion_probability(config: AnalyticConfig) -> float:
    """p(|F_0| = 1, |F_1| = 2)."""
    if config.theta == 0 or config.x11 == config.x21:
        return 0.0
    value, _ = region_probability(psi_contagion(config), config.rate)
    return max(value, 0.0)


@dataclass(frozen=True)
class EventProbabilities:
    p0: float
    p1: float
    p2: float
    p_c: float

    @property
    def conditioned(self) -> float:
        """P(|F_0| >= 1)."""
        return self.p1 + self.p2

    @property
    def expected_initial(self) -> float:
        """E|F_0|."""
        return self.p1 + 2 * self.p2

    @property
    def a_mean(self) -> float:
        """E|F_inf| / E|F_0|; contagion adds one bankruptcy to a single failure."""
        if self.conditioned <= 0:
            return math.nan
        return 1 + self.p_c / self.expected_initial

    def a_quantile(self, q: float) -> float:
        """Nearest-rank q-quantile of A over all scenarios.

        A scenario without an initial bankruptcy counts as A = 1, so A is 2
        with probability p_c and 1 otherwise.
        """
        return 1.0 if 1 - self.p_c >= q else 2.0

    def as_dict(self) -> Dict[str, float]:
        return {"p0": self.p0, "p1": self.p1, "p2": self.p2, "p_c": self.p_c}


def event_probabilities(config: AnalyticConfig) -> EventProbabilities:
    p0, p1, p2 = failure_count_probs(config)
    return EventProbabilities(p0, p1, p2, contagion_probability(config))


def analytic_cell(
    theta: float,
    gamma: float,
    rate: float,
    delta: float,
    epsilon: float,
    transmission: Transmission = Transmission.CAPPED_SHORTFALL,
    quantile: float = 0.999,
) -> LandscapeRow:
    """One landscape row; cell errors become a status."""
    try:
        config = AnalyticConfig.from_indices(
            theta, gamma, rate, delta, epsilon, transmission
        )
        events = event_probabilities(config)
    except InfeasibleTargets as e:
        logger.warning("cell (%g, %g) infeasible: %s", delta, epsilon, e)
        return LandscapeRow.failed(delta, epsilon, CellStatus.INFEASIBLE_TARGETS)
    except NonConvergence as e:
        logger.warning("cell (%g, %g): %s", delta, epsilon, e)
        return LandscapeRow.failed(delta, epsilon, CellStatus.NON_CONVERGENCE)

    if events.conditioned > 0:
        status, a_q999 = CellStatus.OK, events.a_quantile(quantile)
    else:
        status, a_q999 = CellStatus.NOT_ENOUGH_EVENTS, math.nan
    return LandscapeRow(
        delta=delta,
        epsilon=epsilon,
        a_mean=events.a_mean,
        a_q999=a_q999,
        status=status,
        probabilities=events.as_dict(),
    )


def analytic_landscape(
    theta: float,
    gamma: float,
    rate: float,
    cells: Sequence[Tuple[float, float]],
    transmission: Transmission = Transmission.CAPPED_SHORTFALL,
    quantile: float = 0.999,
) -> LandscapeTable:
    """Exact risk landscape of the two-bank system over (delta, epsilon) cells."""
    transmission = Transmission(transmission)
    logger.info(
        "analytic landscape: %d cells, theta=%g gamma=%g lambda=%g (Lambda=%.4f)",
        len(cells),
        theta,
        gamma,
        rate,
        gamma * rate / (1 - theta),
    )
    rows = [
        analytic_cell(theta, gamma, rate, delta, epsilon, transmission, quantile)
        for delta, epsilon in cells
    ]
    metadata = {
        "method": Method.ANALYTIC.value,
        "theta": theta,
        "gamma": gamma,
        "rate": rate,
        "transmission": transmission.value,
        "quantile": quantile,
    }
    return LandscapeTable(rows=rows, metadata=metadata)


def landscape_from_config(config: ExperimentConfig) -> LandscapeTable:
    """Analytic landscape for a two-bank experiment file.

    Raises:
        ConfigError: If the experiment is not a two-bank exponential-shock one
    """
    config.require_analytic()
    return analytic_landscape(
        theta=config.system.theta,
        gamma=config.system.gamma,
        rate=config.shock_distribution().rate,
        cells=config.grid.cells(),
        transmission=config.simulation.transmission,
        quantile=config.simulation.quantile,
    )
