"""Bank balance sheets synthesized from a credit network and (theta, gamma)."""

from dataclasses import dataclass
from typing import Iterator, List, Optional, Tuple

import numpy as np

from .credit_network import CreditNetwork, build_network
from .errors import InfeasibleTheta, NegativeDeposits

DEPOSIT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SystemParameters:
    """Macroscopic parameters of the financial system.

    theta is the interbank loan ratio L / sum(a_n), gamma the equity capital
    ratio shared by every bank.
    """
    theta: float
    gamma: float
    total_interbank: float

    def __post_init__(self):
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.theta + self.gamma >= 1:
            raise ValueError("theta + gamma must be < 1")
        if self.total_interbank <= 0:
            raise ValueError("total interbank lending L must be positive")

    @classmethod
    def normalized(cls, theta: float, gamma: float, n_banks: int) -> "SystemParameters":
        """L = theta * N, so the average bank holds unit assets."""
        return cls(theta=theta, gamma=gamma, total_interbank=theta * n_banks)


@dataclass(frozen=True)
class BalanceSheet:
    external_assets: float
    interbank_loans: float
    equity_capital: float
    interbank_borrowings: float
    deposits: float

    @property
    def total_assets(self) -> float:
        return self.external_assets + self.interbank_loans


@dataclass
class BankingSystem:
    """Balance sheets of all banks, stored column-wise, plus the loans behind them."""
    external_assets: np.ndarray
    interbank_loans: np.ndarray
    equity_capital: np.ndarray
    interbank_borrowings: np.ndarray
    deposits: np.ndarray
    loan_matrix: np.ndarray
    params: SystemParameters

    @property
    def total_assets(self) -> np.ndarray:
        return self.external_assets + self.interbank_loans

    @property
    def n_banks(self) -> int:
        return self.external_assets.shape[0]

    def __len__(self) -> int:
        return self.n_banks

    def __getitem__(self, n: int) -> BalanceSheet:
        return BalanceSheet(
            external_assets=float(self.external_assets[n]),
            interbank_loans=float(self.interbank_loans[n]),
            equity_capital=float(self.equity_capital[n]),
            interbank_borrowings=float(self.interbank_borrowings[n]),
            deposits=float(self.deposits[n]),
        )

    def __iter__(self) -> Iterator[BalanceSheet]:
        return (self[n] for n in range(self.n_banks))

    @property
    def sheets(self) -> List[BalanceSheet]:
        return list(self)

    def scaled(self, factor: float) -> "BankingSystem":
        """Same system expressed in a different money unit."""
        return BankingSystem(
            external_assets=self.external_assets * factor,
            interbank_loans=self.interbank_loans * factor,
            equity_capital=self.equity_capital * factor,
            interbank_borrowings=self.interbank_borrowings * factor,
            deposits=self.deposits * factor,
            loan_matrix=self.loan_matrix * factor,
            params=SystemParameters(
                theta=self.params.theta,
                gamma=self.params.gamma,
                total_interbank=self.params.total_interbank * factor,
            ),
        )


def interbank_totals(weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-bank interbank loans (row sums) and borrowings (column sums)."""
    weights = np.asarray(weights, dtype=float)
    return weights.sum(axis=1), weights.sum(axis=0)


def external_assets(
    loans: np.ndarray, borrowings: np.ndarray, params: SystemParameters
) -> np.ndarray:
    """External assets covering net borrowing plus a share of the residual.

    Every bank first holds its net interbank borrowing ``max(b_n - l_n, 0)``;
    the remaining external assets of the system, ``(1 - theta) / theta * L``
    minus those holdings, are allotted in proportion to ``l_n``.

    Raises:
        InfeasibleTheta: If the system's external assets cannot cover the
            net borrowings of all banks
    """
    loans = np.asarray(loans, dtype=float)
    borrowings = np.asarray(borrowings, dtype=float)
    total = params.total_interbank
    net_borrowing = np.maximum(borrowings - loans, 0.0)
    residual = (1 - params.theta) / params.theta * total - net_borrowing.sum()
    if residual < -1e-12 * total:
        raise InfeasibleTheta(
            f"residual external assets {residual:.6g} < 0 at theta={params.theta}"
        )
    return net_borrowing + max(residual, 0.0) * loans / total


def build_system(
    adjacency: np.ndarray,
    r: Optional[float],
    params: SystemParameters,
    rho5_target: Optional[float] = None,
    rho5_tolerance: float = 0.01,
) -> BankingSystem:
    """Compose loan matrix, interbank totals and external assets into balance sheets.

    Raises:
        InfeasibleTheta: Propagated from external_assets
        NegativeDeposits: If theta + gamma leaves some bank with negative deposits
    """
    network = build_network(
        adjacency,
        params.total_interbank,
        r=r,
        rho5_target=rho5_target,
        rho5_tolerance=rho5_tolerance,
    )
    return system_from_network(network, params)


def system_from_network(
    network: CreditNetwork, params: SystemParameters
) -> BankingSystem:
    loans, borrowings = interbank_totals(network.loan_matrix)
    external = external_assets(loans, borrowings, params)
    assets = external + loans
    capital = params.gamma * assets
    deposits = assets - (capital + borrowings)

    floor = -DEPOSIT_TOLERANCE * max(float(assets.max()), 1.0)
    worst = int(np.argmin(deposits))
    if deposits[worst] < floor:
        raise NegativeDeposits(
            f"bank {worst} has deposits {deposits[worst]:.6g} < 0 "
            f"(theta={params.theta}, gamma={params.gamma})"
        )
    return BankingSystem(
        external_assets=external,
        interbank_loans=loans,
        equity_capital=capital,
        interbank_borrowings=borrowings,
        deposits=np.maximum(deposits, 0.0),
        loan_matrix=network.loan_matrix,
        params=params,
    )
