"""
FastMCP server exposing the mmlang toolchain.

Two generic tools front the registry: list_functions describes every
registered toolchain operation and call_function invokes one by name.
"""

import json
from typing import Any

from mcp.server.fastmcp import Context, FastMCP
from pydantic import BaseModel

from mmlang.models.errors import (
    function_not_found_error,
    internal_error,
    invalid_params_error,
)
from mmlang.registry_builder import FUNCTION_REGISTRY
from mmlang.utils.context import toolchain_lifespan
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

mcp = FastMCP(
    "mmlang toolchain",
    lifespan=toolchain_lifespan,
)

AVAILABLE_FUNCTION_NAMES = list(FUNCTION_REGISTRY.keys())


def _parse_parameters(parameters: dict[str, Any] | str | None) -> dict[str, Any]:
    """
    Accept parameters as a dictionary or as a JSON object string.

    Raises:
        ValueError: If the value is neither
    """
    if parameters is None:
        return {}
    if isinstance(parameters, dict):
        return parameters
    if isinstance(parameters, str):
        try:
            parsed = json.loads(parameters)
        except json.JSONDecodeError:
            raise ValueError("Invalid JSON in parameters string") from None
        if not isinstance(parsed, dict):
            raise ValueError("Parameters string must parse to a JSON object/dictionary")
        return parsed
    raise ValueError(
        f"Parameters must be a dictionary or JSON string, got {type(parameters).__name__}"
    )


@mcp.tool()
async def list_functions() -> dict[str, Any]:
    """Lists every toolchain function with its description and parameters.

    Returns:
        Dictionary containing all available functions and their metadata
    """
    try:
        available_functions = {
            name: {
                "description": info["description"],
                "parameters": info["parameters"],
                "returns": info.get("returns", {}),
            }
            for name, info in FUNCTION_REGISTRY.items()
        }
        return {
            "available_functions": available_functions,
            "total_functions": len(available_functions),
        }
    except Exception:
        logger.exception("Error listing functions")
        return internal_error("Error listing functions", "list_functions")


@mcp.tool()
async def call_function(
    ctx: Context,
    function_name: str,
    parameters: dict[str, Any] | str | None = None,
) -> Any:
    """Call a toolchain function with the provided parameters.

    Args:
        ctx: The MCP context
        function_name: Name of the function to call (use list_functions to see available options)
        parameters: Dictionary of parameters, or a JSON string that parses to one (optional)

    Returns:
        The function result as a dictionary or error dictionary
    """
    if function_name not in FUNCTION_REGISTRY:
        return function_not_found_error(function_name, AVAILABLE_FUNCTION_NAMES)

    implementation = FUNCTION_REGISTRY[function_name]["implementation"]
    try:
        parsed_parameters = _parse_parameters(parameters)
        result = await implementation(ctx, **parsed_parameters)
    except (TypeError, ValueError) as e:
        return invalid_params_error(str(e), function_name)
    except Exception:
        logger.exception(f"Error calling function '{function_name}'")
        return internal_error(f"Error calling function '{function_name}'", "call_function")

    if isinstance(result, BaseModel):
        return {
            "data": result.model_dump(),
            "schema": {
                "model_name": result.__class__.__name__,
                "fields": result.model_json_schema(),
                "description": (
                    f"Response data structured according to the {result.__class__.__name__} model"
                ),
            },
        }
    return result
