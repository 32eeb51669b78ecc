"""Figure data output."""
import csv
import io
import math
import sys
from pathlib import Path

# Add src to path
PROJECT_SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(PROJECT_SRC))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from dyadic.bridge_store import LazyBridgePath  # noqa: E402
from dyadic.noise import KeyedUniforms, ScriptedNormals  # noqa: E402
from search.certificate2 import outer_intervals  # noqa: E402
from search.figures import emit_figure_data, write_figure_file  # noqa: E402
from search.online_argmin import run_basic  # noqa: E402


def _blocks(text):
    return [block for block in text.split("\n\n") if block.strip()]


def test_figure_one_shape():
    result = run_basic(14, 4, normals=ScriptedNormals([-1.0]))
    sink = io.StringIO()
    count = emit_figure_data(result, sink)
    rows = list(csv.reader(io.StringIO(sink.getvalue())))
    assert rows[0] == ["level", "k", "value"]
    assert count == 4 * (2**13 + 1)
    assert len(rows) == count + 1
    assert sorted({int(r[0]) for r in rows[1:]}) == [1, 2, 3, 4]


def test_red_x_truncates_blocks():
    result = run_basic(4, 3, normals=ScriptedNormals())
    sink = io.StringIO()
    assert emit_figure_data(result, sink) == 2**3 + 1
    assert {line.split(",")[0] for line in sink.getvalue().splitlines()[1:]} == {"1"}


def test_run_without_levels_has_no_records():
    result = run_basic(5, 2, normals=np.random.default_rng(0), record_levels=False)
    sink = io.StringIO()
    assert emit_figure_data(result, sink) == 0
    assert sink.getvalue() == "level,k,value\n"


def test_values_round_trip_exactly():
    result = run_basic(6, 2, normals=np.random.default_rng(3))
    sink = io.StringIO()
    emit_figure_data(result, sink)
    rows = list(csv.DictReader(io.StringIO(_blocks(sink.getvalue())[0])))
    first = [float(r["value"]) for r in rows if r["level"] == "1"]
    assert first == result.level_arrays[0].tolist()


def test_figure_two_block_with_m_values(tmp_path):
    d = 7
    seed = next(
        s for s in range(100)
        if run_basic(d, 4, LazyBridgePath.from_seed(s), coupled=True, certificate2=KeyedUniforms(s)).green
    )
    result = run_basic(d, 4, LazyBridgePath.from_seed(seed), coupled=True, certificate2=KeyedUniforms(seed))
    path = tmp_path / "fig2.csv"
    count = write_figure_file(result, path, recentred=True)

    text = path.read_text(encoding="utf-8")
    assert "\r" not in text
    grid_block, m_block = _blocks(text)
    assert m_block.startswith("level,interval_k,m")
    middle_per_level = 2 ** (d - 1)
    assert count == 4 * (2**d + 1) + len(result.m_samples) + 4 * middle_per_level

    rows = list(csv.DictReader(io.StringIO(grid_block)))
    for n in range(1, 5):
        K = result.argmin_indices[n]
        centred = [float(r["value"]) for r in rows if r["level"] == str(n)]
        assert centred[K] == 0.0
        assert min(centred) == 0.0

    # same baseline as the grid: a green run has every outer m above 0
    outer = set(outer_intervals(d).tolist())
    m_rows = list(csv.DictReader(io.StringIO(m_block)))
    for n in range(1, 5):
        level = [r for r in m_rows if r["level"] == str(n)]
        assert [int(r["interval_k"]) for r in level] == list(range(1, 2**d + 1))
        for r in level:
            if int(r["interval_k"]) in outer:
                assert float(r["m"]) > 0.0
            else:
                assert float(r["m"]) == 0.0


def test_recentred_red_x_m_value_is_not_positive():
    class TinyUniforms:
        def at(self, level, index):
            return np.full(np.atleast_1d(index).shape, 1e-300)

    result = run_basic(5, 3, normals=ScriptedNormals([-1.0]), certificate2=TinyUniforms())
    assert result.cert2_abort_level == 1
    sink = io.StringIO()
    emit_figure_data(result, sink, recentred=True)
    m_rows = list(csv.DictReader(io.StringIO(_blocks(sink.getvalue())[1])))
    failed = result.m_samples[-1]
    (row,) = [r for r in m_rows if int(r["interval_k"]) == failed.k]
    assert float(row["m"]) <= 0.0
    assert float(row["m"]) == pytest.approx(math.sqrt(2) * (failed.m - result.fine_arrays[0][result.argmin_indices[1]]))


def test_plain_output_keeps_raw_m_values():
    result = run_basic(5, 2, normals=np.random.default_rng(1), certificate2=KeyedUniforms(1))
    sink = io.StringIO()
    emit_figure_data(result, sink)
    if result.m_samples:
        m_rows = list(csv.DictReader(io.StringIO(_blocks(sink.getvalue())[1])))
        assert [float(r["m"]) for r in m_rows] == [s.m for s in result.m_samples]
