"""
Utility module exports.
"""

from mmlang.utils.config import Settings, get_settings
from mmlang.utils.logging import configure_logging, get_logger

__all__ = [
    # Config
    "Settings",
    "get_settings",
    # Logging
    "configure_logging",
    "get_logger",
]
