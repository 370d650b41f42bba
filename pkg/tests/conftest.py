from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from src.balance_sheet import BankingSystem, SystemParameters, build_system
from src.config import ExperimentConfig, parse_config
from src.credit_network import complete_network


def pytest_configure(config):
    """Configure pytest for our tests"""
    # Register custom markers
    config.addinivalue_line("markers", "integration: mark test as an integration test")
    config.addinivalue_line("markers", "slow: long-running, deselected by default")


@pytest.fixture(autouse=True)
def env_setup(monkeypatch):
    """Keep thread count and log level independent of the developer's .env"""
    monkeypatch.setenv("ANWSER_THREADS", "1")
    monkeypatch.setenv("ANWSER_LOG_LEVEL", "WARNING")


def two_bank_data(**simulation) -> dict:
    return {
        "system": {"n_banks": 2, "n_assets": 2, "theta": 0.1, "gamma": 0.05},
        "network": {"topology": "complete", "heterogeneity": 0.0},
        "shock": {
            "kind": "two_sided_exponential",
            "calibration_probability": 1e-3,
            "calibration_gamma": 0.07,
        },
        "simulation": {
            "n_samples": 20_000,
            "master_seed": 11,
            "transmission": "capped_shortfall",
            **simulation,
        },
        "grid": {"delta": "0.2:0.6:3", "epsilon": "0:0.2:2"},
    }


@pytest.fixture
def two_bank_config() -> ExperimentConfig:
    """Two banks, complete network, calibrated exponential shocks"""
    return parse_config(two_bank_data())


@pytest.fixture
def small_network_config() -> ExperimentConfig:
    """A 20-bank scale-free system that runs in well under a second"""
    return parse_config(
        {
            "system": {"n_banks": 20, "n_assets": 2, "theta": 0.1, "gamma": 0.07},
            "network": {"kappa_target": 8, "heterogeneity": 0.5},
            "shock": {"kind": "student_t", "dof": 1.5, "calibration_probability": 0.05},
            "simulation": {
                "n_samples": 2_000,
                "networks_per_cell": 4,
                "master_seed": 3,
                "min_events": 10,
            },
            "grid": {"delta": "0:0.4:3", "epsilon": "0:0.2:2"},
        }
    )


@pytest.fixture
def two_bank_system() -> BankingSystem:
    """Both banks hold unit assets and lend theta = 0.1 to each other"""
    params = SystemParameters.normalized(0.1, 0.05, 2)
    return build_system(complete_network(2), 0.0, params)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def write_toml(tmp_path: Path) -> Callable[[str], Path]:
    """Write TOML text to a temporary experiment file"""

    def write(text: str, name: str = "experiment.toml") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return write
