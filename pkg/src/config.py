"""Experiment configuration: TOML files validated by pydantic models."""

import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from dotenv import load_dotenv
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from .balance_sheet import SystemParameters
from .cascade import Transmission
from .errors import ConfigError
from .shocks import ShockDistribution, ShockKind, calibrated_distribution

GRID_TOLERANCE = 1e-12


class Topology(str, Enum):
    BARABASI_ALBERT = "barabasi_albert"
    COMPLETE = "complete"


class Method(str, Enum):
    MONTE_CARLO = "mc"
    ANALYTIC = "analytic"


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemSection(Section):
    n_banks: int = Field(500, ge=2)
    n_assets: int = Field(2, ge=1)
    theta: float = Field(0.1, gt=0, lt=1)
    gamma: float = Field(0.07, gt=0, lt=1)

    @model_validator(mode="after")
    def _deposits_nonnegative(self):
        if self.theta + self.gamma >= 1:
            raise ValueError("theta + gamma must be < 1")
        return self


class NetworkSection(Section):
    """A fixed heterogeneity r, when given, replaces calibration to rho5_target."""
    topology: Topology = Topology.BARABASI_ALBERT
    kappa_target: float = Field(25.0, ge=1)
    rho5_target: Optional[float] = Field(0.25, ge=0, le=1)
    heterogeneity: Optional[float] = Field(None, ge=0)
    rho5_tolerance: float = Field(0.01, gt=0)

    @property
    def calibration_target(self) -> Optional[float]:
        return None if self.heterogeneity is not None else self.rho5_target


class ShockSection(Section):
    """Either an explicit rate/scale, or calibration to a failure probability."""
    kind: ShockKind = ShockKind.STUDENT_T
    dof: float = Field(1.5, gt=0)
    rate: Optional[float] = Field(None, gt=0)
    scale: Optional[float] = Field(None, gt=0)
    calibration_probability: float = Field(1e-3, gt=0, lt=0.5)
    calibration_gamma: Optional[float] = Field(None, gt=0, lt=1)

    @property
    def calibrated(self) -> bool:
        if self.kind is ShockKind.TWO_SIDED_EXPONENTIAL:
            return self.rate is None
        return self.scale is None

    def distribution(self, theta: float, gamma: float) -> ShockDistribution:
        if not self.calibrated:
            if self.kind is ShockKind.TWO_SIDED_EXPONENTIAL:
                return ShockDistribution(self.kind, rate=self.rate)
            return ShockDistribution(self.kind, dof=self.dof, scale=self.scale)
        return calibrated_distribution(
            self.kind,
            gamma=self.calibration_gamma or gamma,
            theta=theta,
            p_target=self.calibration_probability,
            dof=self.dof,
        )


class SimulationSection(Section):
    n_samples: int = Field(100_000, ge=1)
    networks_per_cell: Optional[int] = Field(None, ge=1)
    master_seed: int = Field(0, ge=0)
    transmission: Transmission = Transmission.FULL_LOAN
    quantile: float = Field(0.999, gt=0, lt=1)
    min_events: int = Field(100, ge=1)
    max_network_attempts: int = Field(100, ge=1)


class AxisRange(Section):
    start: float
    stop: float
    steps: int = Field(ge=1)

    @classmethod
    def parse(cls, text: str) -> "AxisRange":
        try:
            start, stop, steps = text.split(":")
            return cls(start=float(start), stop=float(stop), steps=int(steps))
        except ValueError as e:
            raise ValueError(f"expected 'min:max:steps', got {text!r}") from e

    def values(self) -> List[float]:
        grid = np.linspace(self.start, self.stop, self.steps)
        return [round(float(v), 12) for v in grid]


class GridSection(Section):
    delta: AxisRange = AxisRange(start=0.0, stop=1.0, steps=11)
    epsilon: AxisRange = AxisRange(start=0.0, stop=1.0, steps=11)

    @field_validator("delta", "epsilon", mode="before")
    @classmethod
    def _parse_range(cls, value: Any) -> Any:
        if isinstance(value, str):
            return AxisRange.parse(value)
        return value

    @classmethod
    def parse(cls, text: str) -> "GridSection":
        """``delta_min:delta_max:steps,eps_min:eps_max:steps``"""
        try:
            delta, epsilon = text.split(",")
        except ValueError as e:
            raise ValueError(
                f"expected two comma-separated ranges, got {text!r}"
            ) from e
        return cls(delta=delta, epsilon=epsilon)

    def cells(self) -> List[Tuple[float, float]]:
        """Feasible (delta, epsilon) cells, delta-major."""
        return [
            (delta, epsilon)
            for delta in self.delta.values()
            for epsilon in self.epsilon.values()
            if delta >= 0 and epsilon >= 0 and delta + epsilon <= 1 + GRID_TOLERANCE
        ]


class ExperimentConfig(Section):
    system: SystemSection = SystemSection()
    network: NetworkSection = NetworkSection()
    shock: ShockSection = ShockSection()
    simulation: SimulationSection = SimulationSection()
    grid: GridSection = GridSection()

    @model_validator(mode="after")
    def _check_ranges(self):
        n_banks = self.system.n_banks
        if self.system.n_assets != 2:
            raise ValueError("portfolio synthesis supports M=2 only")
        if self.network.topology is Topology.BARABASI_ALBERT:
            kappa = self.network.kappa_target
            if not 1 <= kappa <= n_banks - 1:
                raise ValueError(f"kappa_target must lie in [1, {n_banks - 1}]")
            if round(kappa) < 2:
                raise ValueError(
                    f"kappa_target={kappa} grows a tree; every orientation of a "
                    "tree has a bank that borrows without lending, whose deposits "
                    "are negative, so use kappa_target >= 1.5"
                )
        if self.simulation.n_samples * (1 - self.simulation.quantile) < 1:
            raise ValueError(
                f"n_samples={self.simulation.n_samples} is too small for the "
                f"{self.simulation.quantile} quantile"
            )
        return self

    def system_parameters(self) -> SystemParameters:
        return SystemParameters.normalized(
            self.system.theta, self.system.gamma, self.system.n_banks
        )

    def shock_distribution(self) -> ShockDistribution:
        return self.shock.distribution(self.system.theta, self.system.gamma)

    def require_analytic(self) -> None:
        if self.system.n_banks != 2 or self.system.n_assets != 2:
            raise ConfigError("analytic method requires N=2")
        if self.shock.kind is not ShockKind.TWO_SIDED_EXPONENTIAL:
            raise ConfigError("analytic method requires two_sided_exponential shocks")

    def require_monte_carlo(self) -> None:
        if self.system.n_banks % 2:
            raise ConfigError(
                "Monte Carlo landscapes split banks into two equal groups and "
                f"need an even N, got N={self.system.n_banks}"
            )


def _format_validation_error(error: ValidationError, source: str) -> str:
    lines = [f"invalid configuration in {source}:"]
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {location}: {item['msg']}")
    return "\n".join(lines)


def parse_config(data: Dict[str, Any], source: str = "<config>") -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_format_validation_error(e, source)) from e


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a TOML experiment file.

    Raises:
        ConfigError: With line/column for syntax errors, dotted field paths
            for invalid values
    """
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_config(data, str(path))


def apply_overrides(
    config: ExperimentConfig, overrides: Dict[str, Any]
) -> ExperimentConfig:
    """Return a copy with dotted-key overrides (``simulation.n_samples``) applied."""
    data = config.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        section, key = dotted.split(".", 1)
        data.setdefault(section, {})[key] = value
    return parse_config(data, "command-line overrides")


def default_threads() -> int:
    """Worker count from ANWSER_THREADS (environment or .env), else CPU count."""
    load_dotenv()
    value = os.environ.get("ANWSER_THREADS")
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            raise ConfigError(f"ANWSER_THREADS must be an integer, got {value!r}")
    return os.cpu_count() or 1


def default_log_level() -> str:
    load_dotenv()
    return os.environ.get("ANWSER_LOG_LEVEL", "INFO").upper()


class ServerSettings(BaseModel):
    """Settings of the tool server, read from the environment."""
    threads: int = Field(1, ge=1)
    max_cells: int = Field(10_000, ge=1)

    @classmethod
    def from_env(cls) -> "ServerSettings":
        load_dotenv()
        return cls(
            threads=default_threads(),
            max_cells=int(os.environ.get("ANWSER_MAX_CELLS", 10_000)),
        )
