"""Investment portfolios of banks and their diversity / risk-exposure indices."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InfeasibleTargets, TooFewAssets

ROW_SUM_TOLERANCE = 1e-12
ROUND_TRIP_TOLERANCE = 1e-9


class PortfolioKind(str, Enum):
    UNIFORM = "uniform"
    BANK_UNIQUE = "bank_unique"
    SYSTEM_WIDE = "system_wide"


@dataclass(frozen=True)
class PortfolioIndices:
    delta: float
    epsilon: float


@dataclass
class Portfolio:
    """N x M matrix of external-asset fractions; each row sums to one."""
    fractions: np.ndarray

    def __post_init__(self):
        fractions = np.asarray(self.fractions, dtype=float)
        if fractions.ndim != 2:
            raise ValueError("portfolio fractions must be an N x M matrix")
        if np.any(fractions < 0) or np.any(fractions > 1):
            raise ValueError("portfolio fractions must lie in [0, 1]")
        if np.any(np.abs(fractions.sum(axis=1) - 1) > ROW_SUM_TOLERANCE):
            raise ValueError("every portfolio row must sum to 1")
        self.fractions = fractions

    @property
    def n_banks(self) -> int:
        return self.fractions.shape[0]

    @property
    def n_assets(self) -> int:
        return self.fractions.shape[1]

    def indices(self) -> PortfolioIndices:
        return PortfolioIndices(delta=diversity(self), epsilon=risk_exposure(self))


def _fractions(portfolio: Union[Portfolio, np.ndarray]) -> np.ndarray:
    if isinstance(portfolio, Portfolio):
        return portfolio.fractions
    return np.asarray(portfolio, dtype=float)


def diversity(portfolio: Union[Portfolio, np.ndarray]) -> float:
    """Average pairwise difference delta between bank portfolios.

    delta = 1/(N(N-1)) * sum_{n != n'} (1/M) * sum_m |X_nm - X_n'm|
    """
    fractions = _fractions(portfolio)
    n_banks, n_assets = fractions.shape
    if n_banks < 2:
        raise ValueError("diversity needs at least two banks")
    # pdist sums over unordered pairs; the ordered sum counts each pair twice
    pair_sum = 2.0 * pdist(fractions, metric="cityblock").sum()
    return float(pair_sum / (n_assets * n_banks * (n_banks - 1)))


def risk_exposure(portfolio: Union[Portfolio, np.ndarray]) -> float:
    """Deviation epsilon of the aggregate allocation from uniform.

    epsilon = (1/N) * sum_m |sum_n X_nm - N/M|
    """
    fractions = _fractions(portfolio)
    n_banks, n_assets = fractions.shape
    column_totals = fractions.sum(axis=0)
    return float(np.abs(column_totals - n_banks / n_assets).sum() / n_banks)


def named_portfolio(
    kind: Union[PortfolioKind, str],
    n_banks: int,
    n_assets: int,
    target_asset: Optional[int] = None,
) -> Portfolio:
    """One of the three archetypes: uniform, bank-unique or system-wide.

    Raises:
        TooFewAssets: For a bank-unique portfolio with fewer assets than banks
    """
    kind = PortfolioKind(kind)
    if kind is PortfolioKind.UNIFORM:
        return Portfolio(np.full((n_banks, n_assets), 1.0 / n_assets))

    fractions = np.zeros((n_banks, n_assets))
    if kind is PortfolioKind.BANK_UNIQUE:
        if n_assets < n_banks:
            raise TooFewAssets(
                f"bank-unique specialization needs M >= N, "
                f"got M={n_assets}, N={n_banks}"
            )
        fractions[np.arange(n_banks), np.arange(n_banks)] = 1.0
        return Portfolio(fractions)

    target = 0 if target_asset is None else target_asset
    if not 0 <= target < n_assets:
        raise ValueError(f"target asset {target} outside [0, {n_assets})")
    fractions[:, target] = 1.0
    return Portfolio(fractions)


def _two_group_levels(
    n_banks: int, delta: float, epsilon: float
) -> Tuple[float, float]:
    """Half-spread h and the magnitude of the mean shift for the two-group design."""
    if n_banks < 2 or n_banks % 2:
        raise ValueError(f"two-group portfolios need an even N >= 2, got {n_banks}")
    if delta < 0 or epsilon < 0 or delta + epsilon > 1 + ROW_SUM_TOLERANCE:
        raise InfeasibleTargets(
            f"(delta, epsilon) = ({delta}, {epsilon}) violates delta + epsilon <= 1"
        )
    # cross-group ordered pairs: N^2/2 of N(N-1), each contributing 2h
    half_spread = delta * (n_banks - 1) / n_banks
    if 0.5 + epsilon / 2 + half_spread > 1 + ROW_SUM_TOLERANCE:
        raise InfeasibleTargets(
            f"(delta, epsilon) = ({delta}, {epsilon}) "
            f"is out of reach for N={n_banks}, M=2"
        )
    return half_spread, epsilon / 2


def _group_columns(
    rng: np.random.Generator,
    n_banks: int,
    half_spread: float,
    shift: float,
    size: Optional[int],
) -> np.ndarray:
    sign = rng.choice([-1.0, 1.0], size=None if size is None else (size, 1))
    mean = 0.5 + sign * shift
    half = n_banks // 2
    offsets = np.concatenate([np.full(half, half_spread), np.full(half, -half_spread)])
    if size is None:
        column = mean + rng.permutation(offsets)
    else:
        column = mean + rng.permuted(np.tile(offsets, (size, 1)), axis=1)
    return np.clip(column, 0.0, 1.0)


def construct_portfolio(
    n_banks: int,
    delta_target: float,
    epsilon_target: float,
    seed: Union[int, np.random.Generator],
) -> Portfolio:
    """Two-asset portfolio hitting (delta, epsilon) exactly.

    Half of the banks hold asset 1 at mu + h, the other half at mu - h, with
    mu = 1/2 +/- epsilon/2 (sign drawn from the seed) and h = delta (N-1)/N.
    Group membership is shuffled by the seed.

    Raises:
        InfeasibleTargets: If an entry would leave [0, 1]
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    half_spread, shift = _two_group_levels(n_banks, delta_target, epsilon_target)
    first = _group_columns(rng, n_banks, half_spread, shift, size=None)
    portfolio = Portfolio(np.column_stack([first, 1.0 - first]))

    indices = portfolio.indices()
    if (
        abs(indices.delta - delta_target) > ROUND_TRIP_TOLERANCE
        or abs(indices.epsilon - epsilon_target) > ROUND_TRIP_TOLERANCE
    ):
        raise InfeasibleTargets(
            "two-group portfolio missed targets: "
            f"got ({indices.delta}, {indices.epsilon})"
        )
    return portfolio


def sample_first_asset_fractions(
    rng: np.random.Generator,
    n_banks: int,
    delta_target: float,
    epsilon_target: float,
    size: int,
) -> np.ndarray:
    """``size`` independent two-group portfolios, as a (size, N) array of X_n1.

    Same construction as :func:`construct_portfolio`, drawn in one batch.
    """
    half_spread, shift = _two_group_levels(n_banks, delta_target, epsilon_target)
    return _group_columns(rng, n_banks, half_spread, shift, size=size)
