"""
Logging setup: one rich handler on stderr so stdout stays parseable.
"""
import logging

from rich.console import Console
from rich.logging import RichHandler

from config import LOG_LEVEL


def configure_logging(level: str = LOG_LEVEL) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=True)],
        force=True,
    )
