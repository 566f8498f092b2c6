import logging
import os
from logging.handlers import TimedRotatingFileHandler
from pathlib import Path
from typing import Optional, Tuple

from rich.logging import RichHandler

from pedsafe.constants import TOOL_NAME
from pedsafe.core.console import console as console_manager

LOG_FILE_NAME = f"{TOOL_NAME}.log"
LOG_RETENTION_DAYS = 30

# (console level, file level) per output mode; the file always keeps detail.
_LEVELS = {
    "silent": (logging.CRITICAL, logging.DEBUG),
    "standard": (logging.INFO, logging.INFO),
    "verbose": (logging.DEBUG, logging.DEBUG),
}


def default_log_dir() -> Path:
    """XDG state dir, falling back to ~/.local/state/pedsafe/logs."""
    base = os.environ.get("XDG_STATE_HOME") or Path.home() / ".local" / "state"
    return Path(base) / TOOL_NAME / "logs"


def _levels(output_mode: str, debug: bool) -> Tuple[int, int]:
    if debug:
        return _LEVELS["verbose"]
    return _LEVELS.get(output_mode, _LEVELS["standard"])


def _file_handler(log_file: Path, level: int) -> TimedRotatingFileHandler:
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler = TimedRotatingFileHandler(
        log_file, when="midnight", backupCount=LOG_RETENTION_DAYS, encoding="utf-8"
    )
    handler.setLevel(level)
    handler.setFormatter(
        logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s", datefmt="%Y-%m-%d %H:%M:%S")
    )
    return handler


def setup_logging(log_dir: Optional[str] = None, debug: bool = False, output_mode: str = "standard") -> logging.Logger:
    """Attach the rich console handler and the rotating file handler to the ``Pedsafe`` logger.

    Calling it again only adjusts handler levels, so repeated CLI runs in one
    process do not stack handlers.
    """
    console_level, file_level = _levels(output_mode, debug)
    logger = logging.getLogger("Pedsafe")
    logger.setLevel(logging.DEBUG)
    logger.propagate = False

    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(file_level if isinstance(handler, TimedRotatingFileHandler) else console_level)
        return logger

    rich_handler = RichHandler(console=console_manager.console, rich_tracebacks=True, markup=False, show_path=False)
    rich_handler.setLevel(console_level)
    logger.addHandler(rich_handler)

    log_file = Path(log_dir or default_log_dir()) / LOG_FILE_NAME
    try:
        logger.addHandler(_file_handler(log_file, file_level))
    except OSError as e:
        console_manager.warning(f"Could not create log file at {log_file}: {e}. Logging to console only.")

    return logger
