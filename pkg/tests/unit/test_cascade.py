from itertools import combinations
from typing import FrozenSet, List

import numpy as np
import pytest

from src.balance_sheet import BankingSystem, SystemParameters, build_system
from src.cascade import (
    Transmission,
    cascade,
    cascade_counts,
    initial_failures,
    portfolio_losses,
)
from src.errors import FeasibilityError

SPECIALIZED = np.array([[1.0, 0.0], [0.0, 1.0]])


def random_systems(n_banks: int, count: int, seed: int) -> List[BankingSystem]:
    """Random tournaments with heterogeneous loans; infeasible ones are skipped"""
    rng = np.random.default_rng(seed)
    params = SystemParameters.normalized(0.2, 0.05, n_banks)
    systems = []
    while len(systems) < count:
        upper = np.triu(rng.integers(0, 2, size=(n_banks, n_banks)), k=1)
        adjacency = (upper + np.triu(1 - upper, k=1).T).astype(np.int8)
        try:
            systems.append(build_system(adjacency, 1.0, params))
        except FeasibilityError:
            continue
    return systems


def least_closed_superset(
    system: BankingSystem, fractions: np.ndarray, shocks: np.ndarray
) -> FrozenSet[int]:
    """Smallest S containing F_0 that no surviving bank's losses can escape"""
    external = portfolio_losses(system, fractions, shocks)
    initial = initial_failures(system, fractions, shocks)
    others = [n for n in range(system.n_banks) if n not in initial]
    for size in range(len(others) + 1):
        for extra in combinations(others, size):
            failed = np.zeros(system.n_banks, dtype=bool)
            failed[list(initial) + list(extra)] = True
            losses = external + system.loan_matrix @ failed
            if not np.any(~failed & (system.equity_capital < losses)):
                return frozenset(np.flatnonzero(failed).tolist())
    raise AssertionError("the full set is always closed")


@pytest.mark.parametrize("transmission", list(Transmission))
def test_should_spread_large_loss_to_creditor(two_bank_system, transmission):
    """When bank 0 loses far more than its capital, should take bank 1 down too"""
    # Act
    result = cascade(two_bank_system, SPECIALIZED, np.array([0.2, 0.0]), transmission)

    # Assert
    assert result.initial_set == frozenset({0})
    assert result.final_set == frozenset({0, 1})
    assert result.ratio == 2.0
    assert result.contagion_rounds == 1


def test_should_distinguish_transmission_rules_on_small_shortfall(two_bank_system):
    """When bank 0 barely fails, should infect bank 1 only under full-loan loss"""
    # Arrange
    shocks = np.array([0.07, 0.0])

    # Act
    full = cascade(two_bank_system, SPECIALIZED, shocks, Transmission.FULL_LOAN)
    capped = cascade(two_bank_system, SPECIALIZED, shocks, "capped_shortfall")

    # Assert
    assert full.ratio == 2.0
    assert capped.ratio == 1.0
    assert capped.stages == (frozenset({0}),)


def test_should_return_no_ratio_without_initial_failures(two_bank_system):
    """When no bank fails initially, should report A as undefined"""
    # Act
    result = cascade(two_bank_system, SPECIALIZED, np.array([0.01, -0.3]))

    # Assert
    assert result.initial_set == frozenset()
    assert result.ratio is None
    assert result.contagion_rounds == 0


def test_should_reach_least_closed_failure_set():
    """When losing whole loans, should stop at the smallest closed superset of F_0"""
    # Arrange
    rng = np.random.default_rng(2024)
    systems = random_systems(6, 5, seed=4)

    for system in systems:
        for _ in range(40):
            fractions = rng.dirichlet([1.0, 1.0], size=6)
            shocks = rng.laplace(0.0, 0.1, size=2)

            # Act
            result = cascade(system, fractions, shocks, Transmission.FULL_LOAN)

            # Assert
            assert result.final_set == least_closed_superset(system, fractions, shocks)
            for earlier, later in zip(result.stages, result.stages[1:]):
                assert earlier < later


def test_should_grow_failures_with_larger_shocks():
    """When every price fall grows, should never save a bank that failed before"""
    # Arrange
    rng = np.random.default_rng(5)
    system = random_systems(7, 1, seed=9)[0]

    for _ in range(100):
        fractions = rng.dirichlet([1.0, 1.0], size=7)
        shocks = rng.laplace(0.0, 0.08, size=2)
        larger = shocks + rng.exponential(0.05, size=2)

        # Act
        before = cascade(system, fractions, shocks, Transmission.FULL_LOAN)
        after = cascade(system, fractions, larger, Transmission.FULL_LOAN)

        # Assert
        assert before.final_set <= after.final_set


def test_should_not_depend_on_money_unit():
    """When all amounts are rescaled, should reproduce every cascade stage"""
    # Arrange
    rng = np.random.default_rng(6)
    system = random_systems(6, 1, seed=1)[0]
    scaled = system.scaled(250.0)

    for _ in range(50):
        fractions = rng.dirichlet([1.0, 1.0], size=6)
        shocks = rng.laplace(0.0, 0.1, size=2)

        # Act / Assert
        for transmission in Transmission:
            original = cascade(system, fractions, shocks, transmission)
            rescaled = cascade(scaled, fractions, shocks, transmission)
            assert original.stages == rescaled.stages


@pytest.mark.parametrize("transmission", list(Transmission))
def test_should_count_batched_cascades_like_single_ones(transmission):
    """When running a batch, should agree with one-by-one cascades"""
    # Arrange
    rng = np.random.default_rng(7)
    system = random_systems(6, 1, seed=2)[0]
    fractions = rng.dirichlet([1.0, 1.0], size=(300, 6))
    shocks = rng.laplace(0.0, 0.1, size=(300, 2))

    # Act
    initial, final = cascade_counts(system, fractions, shocks, transmission)

    # Assert
    for b in range(300):
        result = cascade(system, fractions[b], shocks[b], transmission)
        assert initial[b] == len(result.initial_set)
        assert final[b] == len(result.final_set)
