import asyncio
from dataclasses import dataclass
from typing import Any, Dict, Optional

from mcp.server.fastmcp import FastMCP

from ..analytic_n2 import analytic_landscape
from ..cascade import Transmission
from ..config import GridSection, ServerSettings
from ..errors import ConfigError
from ..landscape import LandscapeTable, table_to_dict
from ..shocks import calibrate_rate


@dataclass
class AnalyticLandscapeRequest:
    """Request for the exact two-bank landscape"""
    theta: float = 0.1
    gamma: float = 0.05
    rate: Optional[float] = None
    calibration_gamma: float = 0.07
    calibration_probability: float = 1e-3
    grid: str = "0:1:11,0:1:11"
    transmission: str = Transmission.CAPPED_SHORTFALL.value
    quantile: float = 0.999


@dataclass
class AnalyticLandscapeResult:
    """Landscape rows plus the shock rate actually used"""
    rate: float
    table: LandscapeTable


async def analytic_landscape_impl(
    settings: ServerSettings, request: AnalyticLandscapeRequest
) -> AnalyticLandscapeResult:
    """Compute the exact two-bank landscape in a worker thread.

    Args:
        settings: Server limits
        request: Model parameters and grid

    Returns:
        AnalyticLandscapeResult with one row per grid cell

    Raises:
        ConfigError: If the grid is malformed or larger than the server allows
    """
    try:
        cells = GridSection.parse(request.grid).cells()
    except ValueError as e:
        raise ConfigError(f"invalid grid: {e}") from e
    if len(cells) > settings.max_cells:
        raise ConfigError(f"grid has {len(cells)} cells, limit is {settings.max_cells}")

    rate = request.rate
    if rate is None:
        rate = calibrate_rate(
            request.calibration_gamma, request.theta, request.calibration_probability
        )
    table = await asyncio.to_thread(
        analytic_landscape,
        request.theta,
        request.gamma,
        rate,
        cells,
        Transmission(request.transmission),
        request.quantile,
    )
    return AnalyticLandscapeResult(rate=rate, table=table)


async def register(server: FastMCP, settings: ServerSettings) -> None:
    """Register the analytic_landscape tool with the MCP server."""

    @server.tool("analytic_landscape")
    async def analytic_landscape_tool(
        theta: float = 0.1,
        gamma: float = 0.05,
        rate: Optional[float] = None,
        calibration_gamma: float = 0.07,
        calibration_probability: float = 1e-3,
        grid: str = "0:1:11,0:1:11",
        transmission: str = "capped_shortfall",
        quantile: float = 0.999,
    ) -> Dict[str, Any]:
        """Exact risk landscape of a two-bank, two-asset system.

        Args:
            theta: Interbank loan ratio
            gamma: Equity capital ratio
            rate: Rate of the two-sided exponential shocks. When omitted it is
                calibrated so a specialized bank with capital ratio
                calibration_gamma fails with probability calibration_probability.
            grid: "delta_min:delta_max:steps,eps_min:eps_max:steps"
            transmission: "capped_shortfall" or "full_loan"
            quantile: Level of the worst-case statistic

        Returns:
            Dict containing:
                rate: Shock rate used
                metadata: Run parameters
                rows: One entry per (delta, epsilon) cell with a_mean, a_q999,
                    status and the event probabilities p0, p1, p2, p_c
        """
        request = AnalyticLandscapeRequest(
            theta=theta,
            gamma=gamma,
            rate=rate,
            calibration_gamma=calibration_gamma,
            calibration_probability=calibration_probability,
            grid=grid,
            transmission=transmission,
            quantile=quantile,
        )
        result = await analytic_landscape_impl(settings, request)
        return {"rate": result.rate, **table_to_dict(result.table)}
