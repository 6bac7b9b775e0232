"""
Registry builder for the tool server.

Scans mmlang.tools for modules with __register_mcp_tools__ = True and derives
each coroutine's metadata from its signature and Google-style docstring
(`Args:` and `Returns:` sections, one `name: description` line per parameter,
the `ctx` parameter left undocumented in the registry).
"""

import importlib
import inspect
import json
import pkgutil
from typing import Any, Union, get_args, get_origin, get_type_hints

import mmlang.tools
from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

SECTION_HEADERS = (
    "args:",
    "returns:",
    "raises:",
    "yields:",
    "examples:",
    "note:",
    "notes:",
)

CONTEXT_PARAMETER = "ctx"

BASIC_TYPE_MAPPING = {
    str: "string",
    int: "integer",
    bool: "boolean",
    float: "number",
    list: "array",
    tuple: "array",
    dict: "object",
}


# ============================================================================
# TYPE CONVERSION
# ============================================================================


def _json_type(python_type) -> str:
    """Map a type hint to a JSON schema type name."""
    if python_type is type(None):
        return "null"

    origin = get_origin(python_type)
    if origin is Union or type(python_type).__name__ == "UnionType":
        members = [t for t in get_args(python_type) if t is not type(None)]
        return _json_type(members[0]) if members else "null"
    if origin is not None:
        python_type = origin

    return BASIC_TYPE_MAPPING.get(python_type, "object")


def _json_default(value) -> Any:
    try:
        json.dumps(value)
        return value
    except (TypeError, ValueError):
        return repr(value)


# ============================================================================
# DOCSTRING PARSING
# ============================================================================


def _is_section_header(line: str) -> bool:
    return line.strip().lower() in SECTION_HEADERS


def _section(docstring: str, header: str) -> list[str]:
    """Lines of one docstring section, without the header line."""
    lines = inspect.cleandoc(docstring).split("\n")
    for i, line in enumerate(lines):
        if line.strip().lower() == header:
            body = []
            for following in lines[i + 1 :]:
                if _is_section_header(following):
                    break
                body.append(following)
            return body
    return []


def _description(docstring: str | None) -> str:
    if not docstring:
        return "No description available"
    summary = []
    for line in inspect.cleandoc(docstring).split("\n"):
        if _is_section_header(line):
            break
        if line.strip():
            summary.append(line.strip())
    return " ".join(summary) or "No description available"


def _parameter_descriptions(docstring: str | None) -> dict[str, str]:
    """`name: description` entries of the Args section; continuation lines are joined."""
    if not docstring:
        return {}
    found: dict[str, str] = {}
    current = None
    for line in _section(docstring, "args:"):
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        name, sep, text = stripped.partition(":")
        if sep and indent <= 4 and " " not in name.split(" (")[0]:
            current = name.split(" (")[0]
            found[current] = text.strip()
        elif current is not None:
            found[current] = f"{found[current]} {stripped}".strip()
    return found


def _returns(docstring: str | None) -> str | None:
    if not docstring:
        return None
    text = " ".join(line.strip() for line in _section(docstring, "returns:") if line.strip())
    return text or None


# ============================================================================
# METADATA EXTRACTION
# ============================================================================


def extract_function_metadata(func) -> dict[str, Any]:
    """
    Build the registry entry of one tool coroutine.

    Args:
        func: The coroutine function

    Returns:
        Dictionary with implementation, description, parameters and returns

    Raises:
        ValueError: If a parameter other than ctx has no Args entry
    """
    signature = inspect.signature(func)
    try:
        type_hints = get_type_hints(func)
    except (NameError, AttributeError, TypeError) as e:
        logger.warning(f"Could not get type hints for {func.__name__}: {e}")
        type_hints = {}
    documented = _parameter_descriptions(func.__doc__)

    parameters = {}
    for name, param in signature.parameters.items():
        if name == CONTEXT_PARAMETER:
            continue
        if name not in documented:
            raise ValueError(f"{func.__name__}: parameter {name} is not documented under Args")
        info = {
            "type": _json_type(type_hints.get(name, str)),
            "required": param.default is inspect.Parameter.empty,
            "description": documented[name],
        }
        if param.default is not inspect.Parameter.empty:
            info["default"] = _json_default(param.default)
        parameters[name] = info

    metadata = {
        "implementation": func,
        "description": _description(func.__doc__),
        "parameters": parameters,
    }
    returns = _returns(func.__doc__)
    if returns:
        metadata["returns"] = {"description": returns, "type": "object"}
    return metadata


# ============================================================================
# REGISTRY BUILDING
# ============================================================================


def _is_valid_function(obj, name: str) -> bool:
    return (
        inspect.iscoroutinefunction(obj)
        and not name.startswith("_")
        and getattr(obj, "__module__", "").startswith(mmlang.tools.__name__)
    )


def _discover_mcp_tool_modules():
    """Import every tools module that sets __register_mcp_tools__."""
    discovered = []
    for module_info in pkgutil.iter_modules(mmlang.tools.__path__, mmlang.tools.__name__ + "."):
        try:
            module = importlib.import_module(module_info.name)
        except Exception as e:
            logger.warning(f"Failed to import module {module_info.name}: {e}")
            continue
        if getattr(module, "__register_mcp_tools__", False):
            discovered.append(module)
            logger.info(f"Discovered MCP tools module: {module_info.name}")
    return discovered


def build_function_registry() -> dict[str, dict[str, Any]]:
    """Discover and register every public coroutine of the tools modules."""
    registry = {}
    for module in _discover_mcp_tool_modules():
        for name, obj in inspect.getmembers(module):
            if not _is_valid_function(obj, name):
                continue
            try:
                registry[name] = extract_function_metadata(obj)
            except ValueError:
                logger.exception(f"Failed to register function {name}")
                continue
            logger.info(f"Registered function: {name} from {module.__name__}")
    return registry


FUNCTION_REGISTRY = build_function_registry()
