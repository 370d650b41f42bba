from pathlib import Path

import pytest

TWO_BANK_TOML = """
[system]
n_banks = 2
theta = 0.1
gamma = 0.05

[network]
topology = "complete"
heterogeneity = 0.0

[shock]
kind = "two_sided_exponential"
calibration_probability = 1e-3
calibration_gamma = 0.07

[simulation]
n_samples = 4000
master_seed = 17
transmission = "capped_shortfall"
min_events = 1

[grid]
delta = "0.2:0.6:3"
epsilon = "0:0.2:2"
"""

SMALL_NETWORK_TOML = """
[system]
n_banks = 20
theta = 0.1
gamma = 0.07

[network]
kappa_target = 8
heterogeneity = 0.5

[shock]
kind = "student_t"
dof = 1.5
calibration_probability = 0.05

[simulation]
n_samples = 2000
networks_per_cell = 2
master_seed = 23
min_events = 1

[grid]
delta = "0:0.4:2"
epsilon = "0:0.2:2"
"""

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture
def two_bank_toml(tmp_path: Path) -> Path:
    """Two-bank experiment small enough for end-to-end runs"""
    path = tmp_path / "two_bank.toml"
    path.write_text(TWO_BANK_TOML)
    return path


@pytest.fixture
def small_network_toml(tmp_path: Path) -> Path:
    """20-bank scale-free experiment"""
    path = tmp_path / "small_network.toml"
    path.write_text(SMALL_NETWORK_TOML)
    return path


@pytest.fixture
def n500_toml() -> Path:
    return CONFIG_DIR / "n500.toml"


@pytest.fixture
def n2_montecarlo_toml() -> Path:
    return CONFIG_DIR / "n2_montecarlo.toml"


@pytest.fixture(scope="module")
def n2_analytic_toml() -> Path:
    return CONFIG_DIR / "n2_analytic.toml"
