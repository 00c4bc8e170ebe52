import logging

from rich.console import Console
from rich.logging import RichHandler

from .config import Config

# Diagnostics go to stderr so stdout stays machine-readable.
err_console = Console(stderr=True)


def setup_logging(level: str = None) -> None:
    logging.basicConfig(
        level=(level or Config.LOG_LEVEL).upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False, rich_tracebacks=True)],
        force=True,
    )
