"""
Environment configuration for the arg-min toolkit.
Values come from the process environment (or a .env file) and are
validated once into a Settings model.
"""

import os
from functools import lru_cache
from pathlib import Path
from typing import Annotated

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

load_dotenv()


# ============================================================================
# ENVIRONMENT CONFIGURATION
# ============================================================================

class Settings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    max_level: Annotated[
        int,
        Field(
            ge=1,
            le=60,
            description="Deepest dyadic level the bridge store may generate (numerators must fit in int64)",
        ),
    ] = 40
    log_level: Annotated[
        str, Field(description="Loguru level for the console and file sinks")
    ] = "INFO"
    log_to_file: Annotated[
        bool, Field(description="Whether to add the rotating file sink")
    ] = False
    log_dir: Annotated[
        Path, Field(description="Directory of the rotating file sink")
    ] = Path("logs")
    workers: Annotated[
        int, Field(ge=1, description="Default worker count for experiments")
    ] = 1
    oracle_extra_levels: Annotated[
        int,
        Field(ge=0, description="Oracle refinement beyond level d+N"),
    ] = 2


def _env_flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in {"1", "true", "yes", "on"}


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Read ARGMIN_* variables once and return the validated settings."""
    return Settings(
        max_level=int(os.getenv("ARGMIN_MAX_LEVEL", "40")),
        log_level=os.getenv("ARGMIN_LOG_LEVEL", "INFO").upper(),
        log_to_file=_env_flag("ARGMIN_LOG_TO_FILE", False),
        log_dir=Path(os.getenv("ARGMIN_LOG_DIR", "logs")),
        workers=int(os.getenv("ARGMIN_WORKERS", "1")),
        oracle_extra_levels=int(os.getenv("ARGMIN_ORACLE_EXTRA_LEVELS", "2")),
    )
