"""
Logging utilities for the current counting package.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Any, Optional

try:
    from rich.console import Console
    from rich.logging import RichHandler
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False

DEFAULT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# CCOUNT_LOG values mapped onto logging level names
_ENV_LEVELS = {
    'error': 'ERROR',
    'warn': 'WARNING',
    'warning': 'WARNING',
    'info': 'INFO',
    'debug': 'DEBUG',
}


def resolve_level(configured: str) -> str:
    """Return the effective level name, letting CCOUNT_LOG win over the config."""
    env_value = os.environ.get('CCOUNT_LOG', '').strip().lower()
    if env_value in _ENV_LEVELS:
        return _ENV_LEVELS[env_value]
    return configured.upper()


def setup_logging(config: Any) -> None:
    """Setup logging configuration."""

    # Handle both dict and object configurations
    if isinstance(config, dict):
        level = config.get('level', 'WARNING')
        format_str = config.get('format', DEFAULT_FORMAT)
        console = config.get('console', True)
        file_path: Optional[str] = config.get('file_path')
    else:
        level = getattr(config, 'level', 'WARNING')
        format_str = getattr(config, 'format', DEFAULT_FORMAT)
        console = getattr(config, 'console', True)
        file_path = getattr(config, 'file_path', None)

    level_value = getattr(logging, resolve_level(level), logging.WARNING)

    logger = logging.getLogger()
    logger.setLevel(level_value)
    logger.handlers.clear()

    formatter = logging.Formatter(format_str)

    if console:
        if RICH_AVAILABLE:
            console_handler: logging.Handler = RichHandler(
                console=Console(stderr=True),
                rich_tracebacks=True,
                show_time=False,
                show_path=False
            )
        else:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(formatter)

        console_handler.setLevel(level_value)
        logger.addHandler(console_handler)

    if file_path:
        file_path_obj = Path(file_path)
        file_path_obj.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(file_path_obj, encoding='utf-8')
        file_handler.setFormatter(formatter)
        file_handler.setLevel(level_value)
        logger.addHandler(file_handler)