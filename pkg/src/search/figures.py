"""Plot-data writers for the search transcript.

Output is CSV (UTF-8, LF), values written with repr() so they round-trip:

    level,k,value            one block row per grid point of hat-B^(n), n = 1..
    <blank line>
    level,interval_k,m       certificate-2 interval minima, when any were drawn

With `recentred=True` both blocks move to the baseline of the second figure.
The first block holds the full grids sqrt 2 (B^(n)(t_k) - B^(n)(t_K(n))), and
each m becomes sqrt 2 (m - B^(n)(t_K(n))), so a negative m is exactly a red-X.
The middle intervals, which the certificate leaves to the next zoom, are
written as m = 0 for every level the certificate ran on.
"""

import csv
from pathlib import Path
from typing import TextIO

from loguru import logger

from search.certificate2 import outer_intervals
from search.online_argmin import SQRT2, RunResult
from shared.errors import PreconditionError


def _recentred_m_rows(result: RunResult) -> list[tuple[int, int, float]]:
    if len(result.fine_arrays) < max(s.level for s in result.m_samples):
        raise PreconditionError("recentred m-values need the per-level grids (record_levels=True)")

    d = result.d
    outer = set(outer_intervals(d).tolist())
    middle = [k for k in range(1, (1 << d) + 1) if k not in outer]
    rows = []
    for level in sorted({s.level for s in result.m_samples}):
        fine = result.fine_arrays[level - 1]
        baseline = float(fine[result.argmin_indices[level]])
        level_rows = [(level, k, 0.0) for k in middle]
        level_rows += [
            (level, s.k, SQRT2 * (s.m - baseline))
            for s in result.m_samples if s.level == level
        ]
        rows += sorted(level_rows, key=lambda row: row[1])
    return rows


def emit_figure_data(result: RunResult, sink: TextIO, recentred: bool = False) -> int:
    """Write the figure blocks for one run; returns the number of data rows."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["level", "k", "value"])

    count = 0
    if recentred:
        for n, fine in enumerate(result.fine_arrays, start=1):
            K = result.argmin_indices[n]
            series = SQRT2 * (fine - fine[K])
            writer.writerows((n, k, repr(float(v))) for k, v in enumerate(series))
            count += len(series)
    else:
        for n, hat in enumerate(result.level_arrays, start=1):
            writer.writerows((n, k, repr(float(v))) for k, v in enumerate(hat))
            count += len(hat)

    if result.m_samples:
        if recentred:
            m_rows = _recentred_m_rows(result)
        else:
            m_rows = [(s.level, s.k, s.m) for s in result.m_samples]
        sink.write("\n")
        writer.writerow(["level", "interval_k", "m"])
        writer.writerows((level, k, repr(m)) for level, k, m in m_rows)
        count += len(m_rows)

    logger.debug("[FUNCTION emit_figure_data] wrote {} records", count)
    return count


def write_figure_file(result: RunResult, path: Path, recentred: bool = False) -> int:
    """emit_figure_data into a file, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as sink:
        count = emit_figure_data(result, sink, recentred=recentred)
    logger.info("[FUNCTION write_figure_file] figure data written | path={} | records={}", path, count)
    return count
