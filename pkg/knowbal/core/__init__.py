"""
Core runtime plumbing: settings, logging and the error hierarchy.
"""

from .config import KnowbalSettings, get_settings, settings
from .errors import KnowbalError
from .logging import configure_logging, get_logger

__all__ = [
    "KnowbalSettings",
    "KnowbalError",
    "configure_logging",
    "get_logger",
    "get_settings",
    "settings",
]
