"""Command-line entry point for the Brownian bridge arg-min toolkit."""

import sys
from pathlib import Path

# src/ holds the packages; make them importable when run as a script
PROJECT_SRC = Path(__file__).resolve().parent / "src"
sys.path.insert(0, str(PROJECT_SRC))

from cli.commands import main  # noqa: E402
from shared.logging_config import configure_logging  # noqa: E402


if __name__ == "__main__":
    # Initialize logging ONCE at application startup
    configure_logging()
    sys.exit(main())
