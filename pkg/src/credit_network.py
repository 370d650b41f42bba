"""Heterogeneous interbank credit networks.

Adjacency convention: ``adjacency[n, k] == 1`` means bank ``n`` lends to bank
``k`` (creditor -> debtor). Loan matrices use the same orientation.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import networkx as nx
import numpy as np
from scipy import optimize
from scipy.special import softmax

from .errors import EmptyNetwork, InvalidDegree, Unreachable, ZeroLoans

logger = logging.getLogger(__name__)

R_INITIAL_UPPER = 4.0
R_MAX = 64.0


@dataclass(frozen=True)
class NetworkIndices:
    """Denseness and concentration of a credit network"""
    kappa: float
    rho5: float


@dataclass
class CreditNetwork:
    adjacency: np.ndarray
    heterogeneity: float
    loan_matrix: np.ndarray

    @property
    def n_banks(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum())

    def indices(self) -> NetworkIndices:
        return NetworkIndices(
            kappa=average_degree(self.adjacency),
            rho5=top5_share(self.loan_matrix.sum(axis=1)),
        )

    def to_digraph(self) -> nx.DiGraph:
        """Weighted creditor -> debtor graph with edges in index order."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n_banks))
        creditors, debtors = np.nonzero(self.adjacency)
        for creditor, debtor in zip(creditors.tolist(), debtors.tolist()):
            graph.add_edge(
                creditor, debtor, weight=float(self.loan_matrix[creditor, debtor])
            )
        return graph


def _as_rng(seed: Union[int, np.random.Generator]) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate_ba_network(
    n_banks: int, kappa_target: float, seed: Union[int, np.random.Generator]
) -> np.ndarray:
    """Grow a directed Barabasi-Albert credit network.

    networkx grows the undirected graph from a clique of ``m + 1`` banks
    (``m = round(kappa_target)``); each later bank attaches ``m`` edges to
    distinct existing banks with probability proportional to their degree.
    Every undirected edge is then oriented creditor -> debtor by a fair coin.

    Args:
        n_banks: Number of banks N (>= 2)
        kappa_target: Desired average out-degree, 1 <= kappa_target <= N - 1
        seed: Integer seed or an existing numpy Generator

    Returns:
        N x N 0/1 integer adjacency matrix with zero diagonal

    Raises:
        InvalidDegree: If N < 2 or kappa_target is out of range
    """
    if n_banks < 2:
        raise InvalidDegree(f"need at least 2 banks, got {n_banks}")
    if not 1 <= kappa_target <= n_banks - 1:
        raise InvalidDegree(
            f"kappa_target={kappa_target} outside [1, {n_banks - 1}]"
        )
    rng = _as_rng(seed)
    m = int(round(kappa_target))
    graph = nx.barabasi_albert_graph(
        n_banks, m, seed=rng, initial_graph=nx.complete_graph(m + 1)
    )

    edges = np.array(sorted(graph.edges()), dtype=np.intp).reshape(-1, 2)
    flips = rng.random(len(edges)) < 0.5
    creditors = np.where(flips, edges[:, 1], edges[:, 0])
    debtors = np.where(flips, edges[:, 0], edges[:, 1])
    adjacency = np.zeros((n_banks, n_banks), dtype=np.int8)
    adjacency[creditors, debtors] = 1
    return adjacency


def complete_network(n_banks: int) -> np.ndarray:
    """Every bank lends to every other bank."""
    adjacency = np.ones((n_banks, n_banks), dtype=np.int8)
    np.fill_diagonal(adjacency, 0)
    return adjacency


def loan_matrix(adjacency: np.ndarray, r: float, total_interbank: float) -> np.ndarray:
    """Distribute the total interbank lending L over the edges.

    The loan on edge n -> n' is proportional to ``(k_out[n] * k_in[n'])**r``.
    Weights are normalized in log space so large ``r`` cannot overflow.

    Raises:
        EmptyNetwork: If the adjacency has no edge
    """
    if r < 0:
        raise ValueError(f"heterogeneity r must be >= 0, got {r}")
    adjacency = np.asarray(adjacency)
    creditors, debtors = np.nonzero(adjacency)
    if creditors.size == 0:
        raise EmptyNetwork("loan matrix of a network without edges")

    k_out = adjacency.sum(axis=1).astype(float)
    k_in = adjacency.sum(axis=0).astype(float)
    log_products = np.log(k_out[creditors]) + np.log(k_in[debtors])
    shares = softmax(r * log_products)

    weights = np.zeros(adjacency.shape, dtype=float)
    weights[creditors, debtors] = shares * total_interbank
    return weights


def average_degree(adjacency: np.ndarray) -> float:
    """Average out-degree kappa = (1/N) * sum(T)."""
    adjacency = np.asarray(adjacency)
    kappa = float(adjacency.sum()) / adjacency.shape[0]
    if kappa == 0:
        logger.warning("network has no edges: kappa = 0 violates 0 < kappa")
    return kappa


def top5_share(loans: np.ndarray) -> float:
    """Share rho5 of the five largest lenders in total interbank loans.

    Raises:
        ZeroLoans: If the loans sum to zero
    """
    loans = np.asarray(loans, dtype=float)
    total = loans.sum()
    if total <= 0:
        raise ZeroLoans("top-5 share of an empty loan book")
    if loans.size <= 5:
        return 1.0
    largest = np.partition(loans, loans.size - 5)[-5:]
    return float(largest.sum() / total)


def _rho5_at(adjacency: np.ndarray, r: float) -> float:
    return top5_share(loan_matrix(adjacency, r, 1.0).sum(axis=1))


def calibrate_r(
    adjacency: np.ndarray, rho5_target: float, tolerance: float = 0.01
) -> float:
    """Find the heterogeneity r at which the network's top-5 share hits the target.

    Relies on rho5 increasing with r. The bracket starts at [0, 4] and the upper
    end doubles up to 64 until it contains the target; the root is then located
    with Brent's bracketing method.

    Args:
        adjacency: Credit network adjacency
        rho5_target: Desired top-5 share
        tolerance: Accepted absolute deviation from the target

    Returns:
        r >= 0 with |rho5(r) - rho5_target| <= tolerance

    Raises:
        Unreachable: If the target lies below rho5(0) or above rho5(64)
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")

    def gap(r: float) -> float:
        return _rho5_at(adjacency, r) - rho5_target

    low_gap = gap(0.0)
    if abs(low_gap) <= tolerance:
        return 0.0
    if low_gap > 0:
        raise Unreachable(
            f"rho5 target {rho5_target} is below the r=0 value "
            f"{low_gap + rho5_target:.4f}"
        )

    upper = R_INITIAL_UPPER
    upper_gap = gap(upper)
    while upper_gap < 0 and upper < R_MAX:
        upper = min(2 * upper, R_MAX)
        upper_gap = gap(upper)
    if abs(upper_gap) <= tolerance:
        return upper
    if upper_gap < 0:
        raise Unreachable(
            f"rho5 target {rho5_target} not reached at r={R_MAX} "
            f"(rho5={upper_gap + rho5_target:.4f})"
        )

    r = optimize.brentq(gap, 0.0, upper, xtol=1e-10)
    if abs(gap(r)) > tolerance:
        raise Unreachable(f"rho5 target {rho5_target} not met within {tolerance}")
    logger.debug("calibrated r=%.6f for rho5=%.4f", r, rho5_target)
    return float(r)


def build_network(
    adjacency: np.ndarray,
    total_interbank: float,
    r: Optional[float] = None,
    rho5_target: Optional[float] = None,
    rho5_tolerance: float = 0.01,
) -> CreditNetwork:
    """Attach loan weights to an adjacency, calibrating r to a top-5 target if given."""
    if rho5_target is not None:
        r = calibrate_r(adjacency, rho5_target, rho5_tolerance)
    elif r is None:
        r = 0.0
    return CreditNetwork(
        adjacency=np.asarray(adjacency),
        heterogeneity=float(r),
        loan_matrix=loan_matrix(adjacency, r, total_interbank),
    )


def write_edge_list(network: CreditNetwork, path: Union[str, Path]) -> None:
    """Write ``creditor debtor weight`` lines, 0-based, full precision."""
    nx.write_edgelist(network.to_digraph(), str(path), data=["weight"])


@dataclass(frozen=True)
class NetworkSummary:
    n_banks: int
    n_edges: int
    kappa: float
    rho5: float
    heterogeneity: float
    max_degree: int
    median_degree: float


def summarize(network: CreditNetwork) -> NetworkSummary:
    """Denseness, concentration and total-degree profile of a network."""
    degrees = network.adjacency.sum(axis=1) + network.adjacency.sum(axis=0)
    indices = network.indices()
    return NetworkSummary(
        n_banks=network.n_banks,
        n_edges=network.n_edges,
        kappa=indices.kappa,
        rho5=indices.rho5,
        heterogeneity=network.heterogeneity,
        max_degree=int(degrees.max()),
        median_degree=float(np.median(degrees)),
    )
