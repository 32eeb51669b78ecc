"""Lazy keyed bridge store."""
import sys
from pathlib import Path

# Add src to path
PROJECT_SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(PROJECT_SRC))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from bridge.fill_in import NoiseConvention, init  # noqa: E402
from dyadic.bridge_store import LazyBridgePath  # noqa: E402
from dyadic.dyadic_time import DyadicTime, grid_argmin  # noqa: E402
from dyadic.noise import KeyedGaussians, ScriptedNormals, TableGaussians  # noqa: E402
from shared.errors import LevelOverflowError  # noqa: E402


def test_pinned_endpoint_and_injected_midpoint():
    assert LazyBridgePath(TableGaussians()).value_at(DyadicTime(0, 0)) == 0.0
    assert LazyBridgePath(TableGaussians()).value_at(DyadicTime(1, 1)) == 0.0
    assert LazyBridgePath(TableGaussians({(1, 1): 1.0})).value_at(DyadicTime(1, 1)) == 0.5


def test_refine_full_examples():
    assert LazyBridgePath(TableGaussians()).refine_full(1).tolist() == [0.0, 0.0]
    path = LazyBridgePath(TableGaussians({(1, 1): 1.0}))
    assert path.refine_full(1).tolist() == [0.0, 0.5]
    assert path.refine_full(2).tolist() == [0.0, 0.25, 0.5, 0.25]


def test_ancestors_are_generated_first():
    path = LazyBridgePath.from_seed(3)
    path.value_at(DyadicTime(1, 3))
    # 1/8 needs 1/4, which needs 1/2
    assert path.values_generated == 3
    assert path.max_level_touched == 3


def test_lookups_reuse_stored_values():
    path = LazyBridgePath.from_seed(3)
    first = path.values_at(6, np.arange(1, 64, 2))
    generated = path.values_generated
    assert generated == 63
    assert np.array_equal(path.values_at(6, np.arange(1, 64, 2)), first)
    assert path.values_generated == generated
    assert path.grid_level == 0

    path.refine_full(7)
    assert path.grid_level == 7
    assert path.values_generated == 127


def test_request_order_does_not_matter():
    times = [DyadicTime(k, 7) for k in range(1, 128, 3)]
    forward = LazyBridgePath.from_seed(42)
    backward = LazyBridgePath.from_seed(42)
    a = [forward.value_at(t) for t in times]
    b = [backward.value_at(t) for t in reversed(times)][::-1]
    assert a == b


def test_stored_values_survive_dense_refinement():
    path = LazyBridgePath.from_seed(9)
    t = DyadicTime(37, 8)
    before = path.value_at(t)
    grid = path.refine_full(10)
    assert grid[37 << 2] == before
    assert path.value_at(t) == before
    assert np.array_equal(path.refine_full(10), grid)


def test_values_at_matches_refine_full():
    sparse = LazyBridgePath.from_seed(5)
    dense = LazyBridgePath.from_seed(5)
    nums = np.array([3, 100, 511, 512, 1023], dtype=np.int64)
    assert np.array_equal(sparse.values_at(10, nums), dense.refine_full(10)[nums])


def test_refine_full_equals_init_with_matched_noise():
    keyed = KeyedGaussians(17)
    d = 8
    script = np.concatenate([keyed.at(r, np.arange(1, 1 << r, 2, dtype=np.int64)) for r in range(1, d + 1)])
    xs, _ = init(d, ScriptedNormals(script))
    assert np.array_equal(LazyBridgePath(keyed).refine_full(d), xs[:-1])


def test_seeded_refinement_is_reproducible():
    a = LazyBridgePath.from_seed(77).refine_full(12)
    b = LazyBridgePath.from_seed(77).refine_full(12)
    assert np.array_equal(a, b)
    assert grid_argmin(a) == grid_argmin(b)


def test_level_overflow():
    path = LazyBridgePath.from_seed(0, max_level=5)
    with pytest.raises(LevelOverflowError):
        path.value_at(DyadicTime(1, 6))
    with pytest.raises(LevelOverflowError):
        path.refine_full(6)


def test_store_covariance():
    picked = np.array([
        LazyBridgePath.from_seed(seed).values_at(2, np.array([1, 2, 3], dtype=np.int64))
        for seed in range(20000)
    ])
    s = np.array([0.25, 0.5, 0.75])
    target = np.minimum.outer(s, s) - np.outer(s, s)
    assert np.max(np.abs(np.cov(picked, rowvar=False) - target)) < 0.01


def test_paper_literal_store_uses_the_literal_sigma():
    path = LazyBridgePath(TableGaussians({(1, 1): 1.0}), NoiseConvention.PAPER_LITERAL)
    assert path.value_at(DyadicTime(1, 1)) == 0.7071067811865476
