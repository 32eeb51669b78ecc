"""Simple centralized logging - configure once, use everywhere.

Call configure_logging ONCE from main.py. Every other module just does
`from loguru import logger`.
"""

import sys
from pathlib import Path
from loguru import logger

from shared.settings import get_settings

# Flag to ensure logging is configured only once,
#   even if configure_logging is called multiple times.
_configured = False


def configure_logging(level: str | None = None, log_dir: Path | None = None) -> None:
    """Configure the loguru sinks. Call this ONCE at application startup.

    Console output goes to stderr: stdout carries run transcripts and reports.
    A rotating file sink is added when ARGMIN_LOG_TO_FILE is set or a log_dir is given.
    """
    global _configured

    if _configured:
        return

    settings = get_settings()
    level = level or settings.log_level

    logger.remove()  # Remove default handler

    # Console output
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:YYYY-MM-DD at HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>",
        colorize=True,
    )

    # File output (rotates daily)
    if log_dir is not None or settings.log_to_file:
        target = Path(log_dir or settings.log_dir)
        target.mkdir(parents=True, exist_ok=True)
        logger.add(
            str(target / "argmin_{time:YYYY-MM-DD_HH-mm-ss}.log"),
            level=level,
            rotation="00:00",
            retention="30 days",
        )

    _configured = True
    logger.debug("Logging configured at level {}", level)
