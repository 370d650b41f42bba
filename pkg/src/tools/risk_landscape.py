import asyncio
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from mcp.server.fastmcp import FastMCP

from ..config import (
    ExperimentConfig,
    GridSection,
    ServerSettings,
    apply_overrides,
    load_config,
)
from ..errors import ConfigError
from ..landscape import LandscapeTable, table_to_dict
from ..monte_carlo import risk_landscape


@dataclass
class RiskLandscapeRequest:
    """Request for a Monte Carlo landscape"""
    config_path: Optional[str] = None
    overrides: Dict[str, Any] = field(default_factory=dict)
    grid: Optional[str] = None


def resolve_config(request: RiskLandscapeRequest) -> ExperimentConfig:
    """Experiment file (or defaults) with dotted overrides and grid applied."""
    if request.config_path:
        config = load_config(request.config_path)
    else:
        config = ExperimentConfig()
    overrides = dict(request.overrides)
    if request.grid:
        try:
            grid = GridSection.parse(request.grid)
        except ValueError as e:
            raise ConfigError(f"invalid grid: {e}") from e
        overrides["grid.delta"] = grid.delta.model_dump()
        overrides["grid.epsilon"] = grid.epsilon.model_dump()
    for key in overrides:
        if "." not in key:
            raise ConfigError(f"override keys look like 'section.field', got {key!r}")
    return apply_overrides(config, overrides)


async def risk_landscape_impl(
    settings: ServerSettings, request: RiskLandscapeRequest
) -> LandscapeTable:
    """Run a Monte Carlo landscape in a worker thread.

    Raises:
        ConfigError: For invalid configurations or oversized grids
    """
    config = resolve_config(request)
    n_cells = len(config.grid.cells())
    if n_cells > settings.max_cells:
        raise ConfigError(f"grid has {n_cells} cells, limit is {settings.max_cells}")
    return await asyncio.to_thread(risk_landscape, config, settings.threads)


async def register(server: FastMCP, settings: ServerSettings) -> None:
    """Register the risk_landscape tool with the MCP server."""

    @server.tool("risk_landscape")
    async def risk_landscape_tool(
        config_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
        grid: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Monte Carlo risk landscape of a heterogeneous interbank network.

        Args:
            config_path: Optional TOML experiment file; defaults are used otherwise
            overrides: Dotted keys such as {"simulation.n_samples": 10000,
                "system.theta": 0.2}
            grid: Optional "delta_min:delta_max:steps,eps_min:eps_max:steps"

        Returns:
            Dict containing:
                metadata: Method, seed, sample counts and shock parameters
                rows: One entry per (delta, epsilon) cell with a_mean, a_q999,
                    n_conditioned, n_total, n_rejected and status
        """
        request = RiskLandscapeRequest(
            config_path=config_path, overrides=overrides or {}, grid=grid
        )
        table = await risk_landscape_impl(settings, request)
        return table_to_dict(table)
