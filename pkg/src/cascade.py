"""Bankruptcy cascades triggered by asset-price shocks.

A bank fails when its loss exceeds its equity capital (strict inequality).
Initial losses come from the price shock on its external assets; at every
later stage creditors of failed banks additionally lose on their interbank
loans, until the set of failed banks stops growing.
"""

from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Optional, Tuple, Union

import numpy as np

from .balance_sheet import BankingSystem
from .portfolio import Portfolio


class Transmission(str, Enum):
    """How much a creditor loses on a loan to a failed bank.

    FULL_LOAN: the whole loan is lost.
    CAPPED_SHORTFALL: the failed bank's loss beyond its capital is passed on
    to its creditors pro rata to their loans, at most the loan itself.
    """
    FULL_LOAN = "full_loan"
    CAPPED_SHORTFALL = "capped_shortfall"


@dataclass(frozen=True)
class CascadeResult:
    """Failure sets F_0 subset F_1 subset ... up to the fixed point.

    Consecutive stages are distinct; the last one is F_inf.
    """
    stages: Tuple[FrozenSet[int], ...]

    @property
    def initial_set(self) -> FrozenSet[int]:
        return self.stages[0]

    @property
    def final_set(self) -> FrozenSet[int]:
        return self.stages[-1]

    @property
    def contagion_rounds(self) -> int:
        return len(self.stages) - 1

    @property
    def ratio(self) -> Optional[float]:
        return reproduction_ratio(self)


def _fractions(portfolio: Union[Portfolio, np.ndarray]) -> np.ndarray:
    if isinstance(portfolio, Portfolio):
        return portfolio.fractions
    return np.asarray(portfolio, dtype=float)


def portfolio_losses(
    system: BankingSystem, portfolio: Union[Portfolio, np.ndarray], shocks: np.ndarray
) -> np.ndarray:
    """Shock losses e_n * sum_m X_nm v_m.

    Accepts a single scenario (X: N x M, v: M) or a batch (X: B x N x M, v: B x M).
    """
    fractions = _fractions(portfolio)
    shocks = np.asarray(shocks, dtype=float)
    if fractions.ndim == 2:
        return system.external_assets * (fractions @ shocks)
    return system.external_assets * np.einsum("bnm,bm->bn", fractions, shocks)


def _interbank_losses(
    system: BankingSystem,
    failed: np.ndarray,
    losses: np.ndarray,
    transmission: Transmission,
) -> np.ndarray:
    """Creditor losses sum_{n' failed} w[n, n'] * (share of loan n' defaults on)."""
    if transmission is Transmission.FULL_LOAN:
        default_share = failed.astype(float)
    else:
        borrowings = system.interbank_borrowings
        shortfall = np.maximum(losses - system.equity_capital, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            share = np.where(borrowings > 0, shortfall / borrowings, 0.0)
        default_share = np.minimum(share, 1.0) * failed
    return default_share @ system.loan_matrix.T


def initial_failures(
    system: BankingSystem, portfolio: Union[Portfolio, np.ndarray], shocks: np.ndarray
) -> FrozenSet[int]:
    """F_0 = {n : c_n < e_n * sum_m X_nm v_m}."""
    losses = portfolio_losses(system, portfolio, shocks)
    return frozenset(np.flatnonzero(system.equity_capital < losses).tolist())


def cascade(
    system: BankingSystem,
    portfolio: Union[Portfolio, np.ndarray],
    shocks: np.ndarray,
    transmission: Union[Transmission, str] = Transmission.FULL_LOAN,
) -> CascadeResult:
    """Iterate the contagion map from F_0 to its fixed point.

    Args:
        system: Balance sheets and loan matrix
        portfolio: N x M fractions
        shocks: Price falls of the M assets
        transmission: Loss rule for loans to failed banks

    Returns:
        CascadeResult with every distinct stage F_0, F_1, ..., F_inf
    """
    transmission = Transmission(transmission)
    capital = system.equity_capital
    external = portfolio_losses(system, portfolio, shocks)

    failed = capital < external
    losses = external
    stages = [frozenset(np.flatnonzero(failed).tolist())]
    if not failed.any():
        return CascadeResult(stages=tuple(stages))

    for _ in range(system.n_banks):
        losses_next = external + _interbank_losses(system, failed, losses, transmission)
        failed_next = failed | (capital < losses_next)
        if np.array_equal(failed_next, failed):
            break
        failed, losses = failed_next, losses_next
        stages.append(frozenset(np.flatnonzero(failed).tolist()))
    return CascadeResult(stages=tuple(stages))


def cascade_counts(
    system: BankingSystem,
    fractions: np.ndarray,
    shocks: np.ndarray,
    transmission: Union[Transmission, str] = Transmission.FULL_LOAN,
) -> Tuple[np.ndarray, np.ndarray]:
    """|F_0| and |F_inf| for a batch of scenarios on one system.

    Each scenario stops as soon as its own failure set stops growing, exactly
    as :func:`cascade` does.

    Args:
        system: Balance sheets and loan matrix shared by the batch
        fractions: B x N x M portfolios
        shocks: B x M price falls

    Returns:
        Two integer arrays of length B
    """
    transmission = Transmission(transmission)
    capital = system.equity_capital
    external = portfolio_losses(system, fractions, shocks)

    failed = capital < external
    initial = failed.sum(axis=1)
    losses = external.copy()
    active = failed.any(axis=1)
    for _ in range(system.n_banks):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        losses_next = external[rows] + _interbank_losses(
            system, failed[rows], losses[rows], transmission
        )
        failed_next = failed[rows] | (capital < losses_next)
        grew = (failed_next != failed[rows]).any(axis=1)
        failed[rows[grew]] = failed_next[grew]
        losses[rows[grew]] = losses_next[grew]
        active[rows[~grew]] = False
    return initial, failed.sum(axis=1)


def reproduction_ratio(result: CascadeResult) -> Optional[float]:
    """A = |F_inf| / |F_0|, or None when nothing failed initially."""
    if not result.initial_set:
        return None
    return len(result.final_set) / len(result.initial_set)
