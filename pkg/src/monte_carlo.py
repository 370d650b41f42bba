"""Monte Carlo risk landscapes.

Every grid cell draws ``n_samples`` scenarios. Scenarios are grouped into
network blocks: all scenarios of a block share one credit network and its
balance sheets, and are simulated in fixed-size chunks. Each network and each
chunk has its own random stream derived from the master seed, so a cell's
statistics do not depend on how blocks are spread over worker threads.
"""

import logging
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .balance_sheet import BankingSystem, system_from_network
from .cascade import cascade_counts
from .config import ExperimentConfig, Method, Topology
from .credit_network import (
    CreditNetwork,
    build_network,
    complete_network,
    generate_ba_network,
)
from .errors import (
    EmptyInput,
    FeasibilityError,
    InfeasibleTargets,
    NetworkRejected,
    NotEnoughEvents,
    Unreachable,
)
from .landscape import CellStatus, LandscapeRow, LandscapeTable
from .portfolio import construct_portfolio, sample_first_asset_fractions
from .shocks import sample_shock

logger = logging.getLogger(__name__)

SAMPLE_CHUNK = 1024
NETWORK_STREAM = 0
SAMPLE_STREAM = 1


def nearest_rank_quantile(samples: Sequence[float], q: float) -> float:
    """Element at 0-based index ceil(q * n) - 1 of the sorted samples.

    Raises:
        EmptyInput: If there are no samples
    """
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise EmptyInput("quantile of an empty sample")
    if not 0 < q < 1:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    return float(np.quantile(values, q, method="inverted_cdf"))


@dataclass
class CellStatistics:
    """Per-sample |F_0| and |F_inf| of one grid cell, in stream order."""
    initial_counts: np.ndarray
    final_counts: np.ndarray
    n_rejected: int = 0
    quantile: float = 0.999

    @classmethod
    def merge(
        cls,
        parts: Sequence[Tuple[np.ndarray, np.ndarray]],
        n_rejected: int,
        quantile: float,
    ) -> "CellStatistics":
        if not parts:
            empty = np.zeros(0, dtype=np.int64)
            return cls(empty, empty.copy(), n_rejected, quantile)
        return cls(
            initial_counts=np.concatenate([p[0] for p in parts]),
            final_counts=np.concatenate([p[1] for p in parts]),
            n_rejected=n_rejected,
            quantile=quantile,
        )

    @property
    def n_total(self) -> int:
        return int(self.initial_counts.size)

    @property
    def conditioned(self) -> np.ndarray:
        return self.initial_counts > 0

    @property
    def n_conditioned(self) -> int:
        return int(self.conditioned.sum())

    @property
    def ratios(self) -> np.ndarray:
        """Per-sample A = |F_inf| / |F_0|, taken as 1 when |F_0| = 0."""
        initial = np.maximum(self.initial_counts, 1)
        ratios = self.final_counts / initial
        ratios[~self.conditioned] = 1.0
        return ratios

    @property
    def a_mean(self) -> float:
        """E|F_inf| / E|F_0|, the bankruptcy-count ratio at the average point."""
        initial = int(self.initial_counts.sum())
        if initial == 0:
            return math.nan
        return float(self.final_counts.sum() / initial)

    @property
    def a_mean_standard_error(self) -> float:
        """Linearized standard error of the ratio estimator ``a_mean``."""
        if self.n_total < 2 or self.n_conditioned == 0:
            return math.nan
        residuals = self.final_counts - self.a_mean * self.initial_counts
        spread = residuals.std(ddof=1) / math.sqrt(self.n_total)
        return float(spread / self.initial_counts.mean())

    @property
    def a_quantile(self) -> float:
        """Nearest-rank quantile of A over every sample of the cell."""
        if self.n_total == 0:
            return math.nan
        return nearest_rank_quantile(self.ratios, self.quantile)

    def event_probabilities(self) -> Dict[str, float]:
        """Empirical p0, p1, p2 (|F_0| = 0, 1, >= 2) and p_c (|F_0| >= 1, growth)."""
        if self.n_total == 0:
            return {}
        initial, final = self.initial_counts, self.final_counts
        return {
            "p0": float(np.mean(initial == 0)),
            "p1": float(np.mean(initial == 1)),
            "p2": float(np.mean(initial >= 2)),
            "p_c": float(np.mean((initial > 0) & (final > initial))),
        }

    def to_row(
        self, delta: float, epsilon: float, status: CellStatus = CellStatus.OK
    ) -> LandscapeRow:
        a_q999 = self.a_quantile if status is CellStatus.OK else math.nan
        return LandscapeRow(
            delta=delta,
            epsilon=epsilon,
            a_mean=self.a_mean,
            a_q999=a_q999,
            n_conditioned=self.n_conditioned,
            n_total=self.n_total,
            n_rejected=self.n_rejected,
            status=status,
            probabilities=self.event_probabilities(),
        )


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one stream key under the master seed."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def network_stream(
    master_seed: int, cell_index: int, block_index: int
) -> np.random.Generator:
    return stream(master_seed, cell_index, block_index, NETWORK_STREAM)


def block_sizes(config: ExperimentConfig) -> List[int]:
    """Number of scenarios simulated on each network of a cell.

    A complete topology has a single possible network, so it gets one block.
    """
    n_samples = config.simulation.n_samples
    if config.network.topology is Topology.COMPLETE:
        return [n_samples]
    per_cell = config.simulation.networks_per_cell or n_samples
    n_networks = min(per_cell, n_samples)
    base, extra = divmod(n_samples, n_networks)
    return [base + 1 if k < extra else base for k in range(n_networks)]


def draw_network(
    config: ExperimentConfig, rng: np.random.Generator
) -> Tuple[CreditNetwork, BankingSystem, int]:
    """Draw a credit network and its balance sheets, redrawing rejected ones.

    Returns:
        The network, its banking system and the number of rejected draws

    Raises:
        NetworkRejected: If ``max_network_attempts`` draws are all rejected
    """
    params = config.system_parameters()
    section = config.network
    if section.topology is Topology.COMPLETE:
        network = build_network(
            complete_network(config.system.n_banks),
            params.total_interbank,
            r=section.heterogeneity or 0.0,
        )
        return network, system_from_network(network, params), 0

    attempts = config.simulation.max_network_attempts
    for rejected in range(attempts):
        adjacency = generate_ba_network(
            config.system.n_banks, section.kappa_target, rng
        )
        try:
            network = build_network(
                adjacency,
                params.total_interbank,
                r=section.heterogeneity,
                rho5_target=section.calibration_target,
                rho5_tolerance=section.rho5_tolerance,
            )
            system = system_from_network(network, params)
        except (FeasibilityError, Unreachable) as e:
            logger.debug("rejected network draw %d: %s", rejected, e)
            continue
        return network, system, rejected
    raise NetworkRejected(
        f"all {attempts} network draws were rejected", n_rejected=attempts
    )


def draw_system(
    config: ExperimentConfig, rng: np.random.Generator
) -> Tuple[BankingSystem, int]:
    _, system, rejected = draw_network(config, rng)
    return system, rejected


def simulate_block(
    config: ExperimentConfig,
    delta: float,
    epsilon: float,
    cell_index: int,
    block_index: int,
    n_samples: int,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Simulate the scenarios of one network block.

    Returns:
        |F_0| and |F_inf| per scenario, and the number of rejected networks
    """
    master_seed = config.simulation.master_seed
    rng = network_stream(master_seed, cell_index, block_index)
    system, rejected = draw_system(config, rng)
    dist = config.shock_distribution()
    n_banks = config.system.n_banks
    transmission = config.simulation.transmission

    initial, final = [], []
    for chunk, start in enumerate(range(0, n_samples, SAMPLE_CHUNK)):
        size = min(SAMPLE_CHUNK, n_samples - start)
        rng = stream(master_seed, cell_index, block_index, SAMPLE_STREAM, chunk)
        first = sample_first_asset_fractions(rng, n_banks, delta, epsilon, size)
        shocks = sample_shock(dist, config.system.n_assets, rng, size=size)
        fractions = np.stack([first, 1.0 - first], axis=2)
        counts = cascade_counts(system, fractions, shocks, transmission)
        initial.append(counts[0])
        final.append(counts[1])
    return np.concatenate(initial), np.concatenate(final), rejected


def run_cell(
    config: ExperimentConfig,
    delta: float,
    epsilon: float,
    cell_index: int = 0,
    executor: Optional[Executor] = None,
) -> CellStatistics:
    """Distribution of the reproduction ratio A at one (delta, epsilon) cell.

    Args:
        config: Experiment configuration
        delta: Portfolio diversity target
        epsilon: Risk-exposure target
        cell_index: Position of the cell in the grid, part of every stream key
        executor: Optional pool the network blocks are spread over

    Returns:
        CellStatistics over all samples of the cell

    Raises:
        InfeasibleTargets: If no two-group portfolio hits (delta, epsilon)
        NetworkRejected: If a block cannot draw an admissible network
        NotEnoughEvents: If fewer than ``min_events`` samples had an initial
            bankruptcy; the statistics are attached to the exception
    """
    construct_portfolio(config.system.n_banks, delta, epsilon, seed=0)

    sizes = block_sizes(config)
    args = [
        (config, delta, epsilon, cell_index, k, size) for k, size in enumerate(sizes)
    ]
    if executor is None:
        blocks = [simulate_block(*a) for a in args]
    else:
        blocks = list(executor.map(lambda a: simulate_block(*a), args))

    statistics = CellStatistics.merge(
        [(b[0], b[1]) for b in blocks],
        n_rejected=sum(b[2] for b in blocks),
        quantile=config.simulation.quantile,
    )
    if statistics.n_conditioned < config.simulation.min_events:
        raise NotEnoughEvents(
            f"only {statistics.n_conditioned} of {statistics.n_total} samples had an "
            f"initial bankruptcy at (delta, epsilon) = ({delta}, {epsilon})",
            statistics=statistics,
        )
    return statistics


def cell_row(
    config: ExperimentConfig, cell_index: int, delta: float, epsilon: float
) -> LandscapeRow:
    """run_cell folded into a table row; cell errors become a status."""
    n_total = config.simulation.n_samples
    try:
        statistics = run_cell(config, delta, epsilon, cell_index)
    except InfeasibleTargets as e:
        logger.warning("cell (%g, %g) infeasible: %s", delta, epsilon, e)
        return LandscapeRow.failed(delta, epsilon, CellStatus.INFEASIBLE_TARGETS)
    except NetworkRejected as e:
        logger.warning("cell (%g, %g): %s", delta, epsilon, e)
        return LandscapeRow.failed(
            delta,
            epsilon,
            CellStatus.NETWORK_REJECTED,
            n_total=n_total,
            n_rejected=e.n_rejected,
        )
    except NotEnoughEvents as e:
        logger.warning("cell (%g, %g): %s", delta, epsilon, e)
        return e.statistics.to_row(delta, epsilon, CellStatus.NOT_ENOUGH_EVENTS)

    logger.info(
        "cell (%g, %g): A_mean=%.4f+-%.4f A_q=%.4f conditioned=%d/%d rejected=%d",
        delta,
        epsilon,
        statistics.a_mean,
        statistics.a_mean_standard_error,
        statistics.a_quantile,
        statistics.n_conditioned,
        statistics.n_total,
        statistics.n_rejected,
    )
    return statistics.to_row(delta, epsilon)


def iter_landscape(
    config: ExperimentConfig, threads: int = 1
) -> Iterator[LandscapeRow]:
    """Rows of the landscape in grid order, computed ``threads`` cells at a time.

    Raises:
        ConfigError: If N is odd
    """
    config.require_monte_carlo()
    cells = config.grid.cells()
    if threads <= 1:
        for index, (delta, epsilon) in enumerate(cells):
            yield cell_row(config, index, delta, epsilon)
        return

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(cell_row, config, index, delta, epsilon)
            for index, (delta, epsilon) in enumerate(cells)
        ]
        try:
            for future in futures:
                yield future.result()
        finally:
            for future in futures:
                future.cancel()


def landscape_metadata(config: ExperimentConfig) -> Dict[str, object]:
    return {
        "method": Method.MONTE_CARLO.value,
        "master_seed": config.simulation.master_seed,
        "n_samples": config.simulation.n_samples,
        "networks_per_cell": len(block_sizes(config)),
        "transmission": config.simulation.transmission.value,
        "quantile": config.simulation.quantile,
        "shock": config.shock_distribution().as_dict(),
    }


def risk_landscape(config: ExperimentConfig, threads: int = 1) -> LandscapeTable:
    """Monte Carlo risk landscape over the configured grid.

    Cell errors never abort the table; they show up in the row status.
    """
    cells = config.grid.cells()
    logger.info(
        "Monte Carlo landscape: %d cells, %d samples each, %d threads",
        len(cells),
        config.simulation.n_samples,
        threads,
    )
    started = time.perf_counter()
    rows = list(iter_landscape(config, threads))
    logger.info("landscape finished in %.1fs", time.perf_counter() - started)
    return LandscapeTable(rows=rows, metadata=landscape_metadata(config))
