"""Reading and writing experiment stats and experiment config files."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, TextIO

from loguru import logger

from experiments.harness import ExperimentStats
from shared.errors import PreconditionError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

STATS_COLUMNS = (
    "d",
    "N",
    "trials",
    "cert1_redx_rate",
    "cert2_redx_rate",
    "dist_exceed_rate",
    "mean_dist",
    "max_dist",
    "wall_time_s",
)

_INT_COLUMNS = {"d", "N", "trials"}


def _cell(value: Any) -> str:
    # repr keeps every digit of a float
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_stats(rows: list[ExperimentStats], fmt: str, sink: TextIO) -> int:
    """Write stats as CSV (fixed columns) or JSON (every field); returns the record count."""
    if fmt == "csv":
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(STATS_COLUMNS)
        for row in rows:
            values = row.model_dump()
            writer.writerow(_cell(values[column]) for column in STATS_COLUMNS)
    elif fmt == "json":
        sink.write(json.dumps([row.model_dump() for row in rows], indent=2) + "\n")
    else:
        raise PreconditionError(f"unknown stats format {fmt!r}; expected csv or json")
    logger.debug("[FUNCTION emit_stats] wrote {} rows as {}", len(rows), fmt)
    return len(rows)


def read_stats(source: TextIO, fmt: str) -> list[ExperimentStats]:
    """Parse what emit_stats wrote."""
    if fmt == "json":
        return [ExperimentStats.model_validate(item) for item in json.load(source)]
    if fmt != "csv":
        raise PreconditionError(f"unknown stats format {fmt!r}; expected csv or json")

    rows = []
    for record in csv.DictReader(source):
        parsed: dict[str, Any] = {}
        for column in STATS_COLUMNS:
            raw = record[column]
            if raw == "":
                parsed[column] = None
            elif column in _INT_COLUMNS:
                parsed[column] = int(raw)
            else:
                parsed[column] = float(raw)
        rows.append(ExperimentStats.model_validate(parsed))
    return rows


def write_stats_file(rows: list[ExperimentStats], path: Path, fmt: str | None = None) -> int:
    """emit_stats into a file; the format defaults to the file suffix."""
    fmt = fmt or ("json" if path.suffix.lower() == ".json" else "csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as sink:
        count = emit_stats(rows, fmt, sink)
    logger.info("[FUNCTION write_stats_file] stats written | path={} | rows={}", path, count)
    return count


def load_config_file(path: Path) -> dict[str, Any]:
    """Key-value experiment settings from a .toml or .json file."""
    suffix = path.suffix.lower()
    if suffix == ".toml":
        with path.open("rb") as handle:
            data = tomllib.load(handle)
    elif suffix == ".json":
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    else:
        raise PreconditionError(f"config file must be .toml or .json, got {path.name}")
    if not isinstance(data, dict):
        raise PreconditionError(f"config file {path.name} must hold a table of settings")
    logger.debug("[FUNCTION load_config_file] loaded {} keys from {}", len(data), path)
    return data
