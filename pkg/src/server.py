import logging
from contextlib import asynccontextmanager

from dotenv import load_dotenv
from mcp.server.fastmcp import FastMCP

from .config import ServerSettings, default_log_level
from .tools.analytic_landscape import register as register_analytic_landscape
from .tools.network_summary import register as register_network_summary
from .tools.risk_landscape import register as register_risk_landscape

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()


@asynccontextmanager
async def lifespan(mcp: FastMCP):
    settings = ServerSettings.from_env()

    # Register all tools
    await register_analytic_landscape(mcp, settings)
    await register_risk_landscape(mcp, settings)
    await register_network_summary(mcp, settings)

    mcp.state = {"settings": settings}
    logger.info("tools registered (threads=%d)", settings.threads)
    yield {"settings": settings}


def create_server() -> FastMCP:
    return FastMCP("anwser", lifespan=lifespan)


if __name__ == "__main__":
    # stdout carries the stdio transport, so logs go to stderr
    logging.basicConfig(
        level=default_log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger.info("Starting ANWSER tool server with stdio transport")
    server = create_server()
    server.run(transport="stdio")
