"""Dyadic time arithmetic, circle distance and grid arg-min."""
import sys
from pathlib import Path

# Add src to path
PROJECT_SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(PROJECT_SRC))

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from dyadic.dyadic_time import (  # noqa: E402
    DyadicTime,
    canonicalize,
    canonicalize_many,
    circle_dist,
    grid_argmin,
)
from shared.errors import EmptyInputError, PreconditionError  # noqa: E402


@pytest.mark.parametrize(
    ("num", "level", "expected"),
    [(2, 2, (1, 1)), (4, 2, (0, 0)), (3, 3, (3, 3)), (0, 5, (0, 0)), (12, 4, (3, 2))],
)
def test_canonicalize(num, level, expected):
    c = canonicalize(DyadicTime(num, level))
    assert (c.num, c.level) == expected


def test_equality_uses_canonical_form():
    assert DyadicTime(2, 2) == DyadicTime(1, 1)
    assert DyadicTime(4, 2) == DyadicTime(0, 0)
    assert hash(DyadicTime(8, 4)) == hash(DyadicTime(1, 1))
    assert DyadicTime(1, 2) != DyadicTime(3, 2)


def test_add_and_sub_wrap_around_the_circle():
    assert DyadicTime(3, 2) + DyadicTime(1, 1) == DyadicTime(1, 2)
    assert DyadicTime(1, 3) - DyadicTime(1, 2) == DyadicTime(7, 3)
    total = DyadicTime(5, 4) + DyadicTime(3, 3)
    assert total.level <= 4
    assert total.value == pytest.approx((5 / 16 + 3 / 8) % 1.0)


def test_from_index_and_numerator_at():
    t = DyadicTime.from_index(12, 4)
    assert (t.num, t.level) == (3, 2)
    assert t.numerator_at(6) == 48
    with pytest.raises(PreconditionError):
        t.numerator_at(1)


def test_negative_inputs_rejected():
    with pytest.raises(PreconditionError):
        DyadicTime(-1, 3)


def test_canonicalize_many_matches_scalar():
    nums = np.arange(0, 70, dtype=np.int64)
    canon_nums, canon_levels = canonicalize_many(6, nums)
    for k, num, level in zip(nums, canon_nums, canon_levels):
        c = canonicalize(DyadicTime(int(k) % 64, 6))
        assert (c.num, c.level) == (int(num), int(level))


@pytest.mark.parametrize(
    ("a", "b", "expected"),
    [(0.95, 0.05, 0.10), (0.25, 0.25, 0.0), (0.0, 0.5, 0.5)],
)
def test_circle_dist_examples(a, b, expected):
    assert circle_dist(a, b) == pytest.approx(expected)


def test_circle_dist_bounded_and_triangle():
    rng = np.random.default_rng(3)
    a, b, c = rng.random((3, 2000))
    ab, bc, ac = circle_dist(a, b), circle_dist(b, c), circle_dist(a, c)
    assert np.all(ab <= 0.5)
    assert np.all(ac <= ab + bc + 1e-12)


@pytest.mark.parametrize(
    ("xs", "expected"),
    [([0, -1, 2], 1), ([0, 0, 0], 0), ([3, 1, 1, 5], 1)],
)
def test_grid_argmin_examples(xs, expected):
    assert grid_argmin(xs) == expected


def test_grid_argmin_empty():
    with pytest.raises(EmptyInputError):
        grid_argmin([])
