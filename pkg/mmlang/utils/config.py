"""
Environment-driven configuration for the mmlang toolchain.

Every knob has a default that keeps CLI output deterministic; the environment
only raises limits or verbosity.
"""

import os
from dataclasses import dataclass, field
from pathlib import Path

from mmlang.utils.logging import get_logger

logger = get_logger(__name__)

# ============================================================================
# DEFAULTS
# ============================================================================

DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_MAX_ERRORS = 50
DEFAULT_ORACLE_TUPLE_BUDGET = 1_000_000
DEFAULT_CONFLICT_TUPLE_LIMIT = 4096
DEFAULT_MAX_CALL_DEPTH = 500


@dataclass(frozen=True)
class Settings:
    """
    Toolchain settings resolved from the environment.
    """

    log_level: str = DEFAULT_LOG_LEVEL
    max_errors: int = DEFAULT_MAX_ERRORS
    oracle_tuple_budget: int = DEFAULT_ORACLE_TUPLE_BUDGET
    conflict_tuple_limit: int = DEFAULT_CONFLICT_TUPLE_LIMIT
    max_call_depth: int = DEFAULT_MAX_CALL_DEPTH
    include_path: tuple[Path, ...] = field(default_factory=tuple)


def _int_from_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def get_settings() -> Settings:
    """
    Read settings from the environment.

    Returns:
        Settings populated from MMLANG_* variables, defaults elsewhere

    Raises:
        ValueError: If a variable is set to an invalid value
    """
    include_raw = os.getenv("MMLANG_INCLUDE_PATH", "")
    include_path = tuple(Path(p) for p in include_raw.split(os.pathsep) if p.strip())

    settings = Settings(
        log_level=os.getenv("MMLANG_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
        max_errors=_int_from_env("MMLANG_MAX_ERRORS", DEFAULT_MAX_ERRORS),
        oracle_tuple_budget=_int_from_env(
            "MMLANG_ORACLE_TUPLE_BUDGET", DEFAULT_ORACLE_TUPLE_BUDGET
        ),
        conflict_tuple_limit=_int_from_env(
            "MMLANG_CONFLICT_TUPLE_LIMIT", DEFAULT_CONFLICT_TUPLE_LIMIT
        ),
        max_call_depth=_int_from_env("MMLANG_MAX_CALL_DEPTH", DEFAULT_MAX_CALL_DEPTH),
        include_path=include_path,
    )
    logger.debug(f"Settings: {settings}")
    return settings
