import asyncio
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional

from mcp.server.fastmcp import FastMCP

from ..config import ServerSettings
from ..credit_network import NetworkSummary, summarize
from ..monte_carlo import draw_network, network_stream
from .risk_landscape import RiskLandscapeRequest, resolve_config


@dataclass
class NetworkSummaryResult:
    summary: NetworkSummary
    n_rejected: int
    total_loans: float


def _sample_summary(request: RiskLandscapeRequest) -> NetworkSummaryResult:
    config = resolve_config(request)
    rng = network_stream(config.simulation.master_seed, 0, 0)
    network, _, rejected = draw_network(config, rng)
    return NetworkSummaryResult(
        summary=summarize(network),
        n_rejected=rejected,
        total_loans=float(network.loan_matrix.sum()),
    )


async def network_summary_impl(
    settings: ServerSettings, request: RiskLandscapeRequest
) -> NetworkSummaryResult:
    """Draw the first network of a configuration and describe it."""
    return await asyncio.to_thread(_sample_summary, request)


async def register(server: FastMCP, settings: ServerSettings) -> None:
    """Register the network_summary tool with the MCP server."""

    @server.tool("network_summary")
    async def network_summary(
        config_path: Optional[str] = None,
        overrides: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """Generate one credit network and report its indices.

        The network is the one ``anwser dump-network`` writes for the same
        configuration and seed.

        Args:
            config_path: Optional TOML experiment file
            overrides: Dotted keys, e.g. {"system.n_banks": 100,
                "simulation.master_seed": 7}

        Returns:
            Dict with n_banks, n_edges, kappa, rho5, heterogeneity (the
            calibrated r), max_degree, median_degree, n_rejected and
            total_loans
        """
        request = RiskLandscapeRequest(
            config_path=config_path, overrides=overrides or {}
        )
        result = await network_summary_impl(settings, request)
        return {
            **asdict(result.summary),
            "n_rejected": result.n_rejected,
            "total_loans": result.total_loans,
        }
