"""
Context management for the mmlang tool server.

Holds the settings every tool call compiles, links and runs with.
"""

from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Any, AsyncGenerator

from mcp.server.fastmcp import Context

from mmlang.utils.config import Settings, get_settings
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass
class ToolchainContext:
    """
    Toolchain context shared by every request.
    """

    settings: Settings


def get_toolchain_context(ctx: Context) -> ToolchainContext:
    """
    Extract the toolchain context from an MCP context.

    Args:
        ctx: MCP context

    Returns:
        ToolchainContext with the server's settings

    Raises:
        ValueError: If the server was not started with toolchain_lifespan
    """
    request_context = getattr(ctx, "request_context", None)
    lifespan_context = getattr(request_context, "lifespan_context", None)
    if isinstance(lifespan_context, ToolchainContext):
        return lifespan_context
    if isinstance(request_context, ToolchainContext):
        return request_context
    raise ValueError(
        "Toolchain context not found. Ensure the server is started with toolchain_lifespan."
    )


@asynccontextmanager
async def toolchain_lifespan(server: Any) -> AsyncGenerator[ToolchainContext, None]:
    """
    Lifespan context manager for the mmlang tool server.

    Args:
        server: The FastMCP server instance

    Yields:
        ToolchainContext for use in request handlers

    Raises:
        ValueError: If an MMLANG_* variable holds an invalid value
    """
    settings = get_settings()
    logger.info("Starting mmlang tool server")
    logger.info(f"Call depth limit: {settings.max_call_depth}")

    try:
        yield ToolchainContext(settings=settings)
    finally:
        logger.info("Shutting down mmlang tool server")
