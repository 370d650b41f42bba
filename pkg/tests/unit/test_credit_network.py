import numpy as np
import pytest

from src.balance_sheet import SystemParameters, external_assets, interbank_totals
from src.credit_network import (
    _rho5_at,
    average_degree,
    build_network,
    calibrate_r,
    complete_network,
    generate_ba_network,
    loan_matrix,
    summarize,
    top5_share,
    write_edge_list,
)
from src.errors import EmptyNetwork, InvalidDegree, Unreachable, ZeroLoans


def expected_edges(n_banks: int, m: int) -> int:
    return m * (m + 1) // 2 + m * (n_banks - m - 1)


@pytest.mark.parametrize("n_banks,kappa", [(3, 1), (10, 2), (50, 5), (200, 25)])
def test_should_grow_oriented_simple_graph(n_banks, kappa):
    """When growing a BA network, should orient every edge exactly once"""
    # Act
    adjacency = generate_ba_network(n_banks, kappa, seed=7)

    # Assert
    assert adjacency.shape == (n_banks, n_banks)
    assert np.all(np.diag(adjacency) == 0)
    assert np.all(adjacency + adjacency.T <= 1)
    assert adjacency.sum() == expected_edges(n_banks, kappa)


def test_should_trace_three_bank_network():
    """When N=3 and kappa=1, should hold the seed edge plus one attachment"""
    # Act
    adjacency = generate_ba_network(3, 1, seed=0)

    # Assert
    assert adjacency.sum() == 2
    undirected = adjacency + adjacency.T
    assert undirected[0, 1] == 1
    assert undirected[2].sum() == 1


def test_should_approach_kappa_target_for_large_networks():
    """When N=500 and kappa=25, should give an average out-degree near 25"""
    # Act
    adjacency = generate_ba_network(500, 25, seed=1)

    # Assert
    assert abs(average_degree(adjacency) - 25) < 1.0


def test_should_reproduce_network_from_seed():
    """When the same seed is used twice, should return the same adjacency"""
    # Act
    first = generate_ba_network(100, 4, seed=42)
    second = generate_ba_network(100, 4, seed=np.random.default_rng(42))

    # Assert
    np.testing.assert_array_equal(first, second)


@pytest.mark.parametrize("n_banks,kappa", [(1, 1), (10, 0), (10, 0.4), (10, 10)])
def test_should_reject_invalid_degree(n_banks, kappa):
    """When N or kappa is out of range, should raise InvalidDegree"""
    with pytest.raises(InvalidDegree):
        generate_ba_network(n_banks, kappa, seed=0)


def test_should_spread_loans_evenly_without_heterogeneity():
    """When r = 0, should give every edge the same loan and sum to L"""
    # Arrange
    adjacency = generate_ba_network(30, 3, seed=5)

    # Act
    weights = loan_matrix(adjacency, 0.0, total_interbank=3.0)

    # Assert
    loans = weights[adjacency == 1]
    assert weights.sum() == pytest.approx(3.0, abs=1e-12)
    np.testing.assert_allclose(loans, 3.0 / adjacency.sum())
    assert np.all(weights[adjacency == 0] == 0)


def test_should_keep_total_for_large_heterogeneity():
    """When r is large, should still distribute exactly L without overflow"""
    # Arrange
    adjacency = generate_ba_network(200, 10, seed=9)

    # Act
    weights = loan_matrix(adjacency, 64.0, total_interbank=20.0)

    # Assert
    assert np.all(np.isfinite(weights))
    assert weights.sum() == pytest.approx(20.0, rel=1e-12)


def test_should_raise_for_network_without_edges():
    """When the adjacency is empty, should raise EmptyNetwork"""
    with pytest.raises(EmptyNetwork):
        loan_matrix(np.zeros((4, 4), dtype=np.int8), 1.0, 1.0)


def test_should_compute_top5_share():
    """When ten banks lend 1..10, should return the share of the five largest"""
    # Act
    share = top5_share(np.arange(1, 11, dtype=float))

    # Assert
    assert share == pytest.approx(40 / 55)


def test_should_return_full_share_for_five_banks_or_fewer():
    """When there are at most five lenders, should return 1"""
    assert top5_share(np.array([0.2, 0.5])) == 1.0


def test_should_raise_for_zero_loans():
    """When all loans are zero, should raise ZeroLoans"""
    with pytest.raises(ZeroLoans):
        top5_share(np.zeros(10))


def test_should_report_degree_of_complete_network():
    """When every bank lends to every other, should give kappa = N - 1"""
    assert average_degree(complete_network(4)) == 3.0


def test_should_calibrate_heterogeneity_to_reachable_target():
    """When the target rho5 lies between rho5(0) and rho5(64), should hit it"""
    # Arrange
    adjacency = generate_ba_network(200, 5, seed=3)
    target = _rho5_at(adjacency, 1.5)

    # Act
    r = calibrate_r(adjacency, target, tolerance=0.01)

    # Assert
    assert r >= 0
    assert abs(_rho5_at(adjacency, r) - target) <= 0.01


def test_should_raise_for_unreachable_target():
    """When the target is below the homogeneous share, should raise Unreachable"""
    # Arrange
    adjacency = generate_ba_network(200, 5, seed=3)

    # Act / Assert
    with pytest.raises(Unreachable):
        calibrate_r(adjacency, 0.0, tolerance=0.001)


def test_should_build_network_with_calibrated_r():
    """When building with a rho5 target, should store the calibrated r"""
    # Arrange
    adjacency = generate_ba_network(200, 5, seed=4)
    target = _rho5_at(adjacency, 2.0)

    # Act
    network = build_network(adjacency, 20.0, rho5_target=target)

    # Assert
    assert network.heterogeneity > 0
    assert abs(network.indices().rho5 - target) <= 0.01
    assert network.loan_matrix.sum() == pytest.approx(20.0)


def test_should_write_weighted_edge_list(tmp_path):
    """When dumping a network, should write one line per edge summing to L"""
    # Arrange
    network = build_network(generate_ba_network(40, 3, seed=2), 4.0, r=1.0)
    path = tmp_path / "network.txt"

    # Act
    write_edge_list(network, path)

    # Assert
    lines = path.read_text().splitlines()
    assert len(lines) == network.n_edges
    total = 0.0
    for line in lines:
        creditor, debtor, weight = line.split()
        assert network.adjacency[int(creditor), int(debtor)] == 1
        total += float(weight)
    assert total == pytest.approx(4.0, abs=1e-9)


def test_should_summarize_complete_network():
    """When summarizing a complete network, should report equal degrees"""
    # Arrange
    network = build_network(complete_network(6), 0.6, r=0.0)

    # Act
    summary = summarize(network)

    # Assert
    assert summary.n_edges == 30
    assert summary.kappa == 5.0
    assert summary.rho5 == pytest.approx(5 / 6)
    assert summary.max_degree == 10
    assert summary.median_degree == 10.0


def test_should_weight_three_bank_loans_by_degree_product():
    """When banks 1->2, 1->3, 2->3 lend with r=1, should split L as 1:2:1"""
    # Arrange
    adjacency = np.array([[0, 1, 1], [0, 0, 1], [0, 0, 0]], dtype=np.int8)

    # Act
    linear = loan_matrix(adjacency, 1.0, total_interbank=1.0)
    squared = loan_matrix(adjacency, 2.0, total_interbank=1.0)

    # Assert
    assert linear[0, 1] == pytest.approx(0.25)
    assert linear[0, 2] == pytest.approx(0.5)
    assert linear[1, 2] == pytest.approx(0.25)
    assert squared[0, 2] == pytest.approx(2 / 3)
    assert squared[0, 2] > linear[0, 2]


def test_should_concentrate_lending_as_heterogeneity_grows():
    """When r runs over 0, 0.5, 1, 2 and 4, should never lower rho5"""
    # Arrange
    adjacency = generate_ba_network(200, 5, seed=3)

    # Act
    shares = [_rho5_at(adjacency, r) for r in (0.0, 0.5, 1.0, 2.0, 4.0)]

    # Assert
    assert np.all(np.diff(shares) >= -1e-12)
    assert shares[-1] > shares[0]


def test_should_relabel_loans_and_assets_with_banks():
    """When banks are permuted, should permute loans and external assets alike"""
    # Arrange
    adjacency = generate_ba_network(40, 3, seed=8)
    order = np.random.default_rng(0).permutation(40)
    permuted = adjacency[np.ix_(order, order)]
    params = SystemParameters.normalized(0.1, 0.07, 40)

    # Act
    weights = loan_matrix(adjacency, 1.5, params.total_interbank)
    permuted_weights = loan_matrix(permuted, 1.5, params.total_interbank)
    external = external_assets(*interbank_totals(weights), params)
    permuted_external = external_assets(*interbank_totals(permuted_weights), params)

    # Assert
    np.testing.assert_allclose(permuted_weights, weights[np.ix_(order, order)])
    np.testing.assert_allclose(permuted_external, external[order])


@pytest.mark.parametrize("n_banks", [100, 500])
def test_should_grow_a_few_hub_banks(n_banks):
    """When growing a BA network, should give hubs far above the median degree"""
    # Arrange
    adjacency = generate_ba_network(n_banks, 5, seed=11)

    # Act
    degrees = adjacency.sum(axis=0) + adjacency.sum(axis=1)

    # Assert
    assert degrees.min() >= 5
    assert degrees.max() / np.median(degrees) >= 3
