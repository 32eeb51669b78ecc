"""
Exact dyadic time arithmetic on the unit circle, plus the two small grid
helpers every search level relies on (circle distance and arg-min).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from shared.errors import EmptyInputError, PreconditionError


@dataclass(frozen=True, slots=True, eq=False)
class DyadicTime:
    """The time num / 2**level, taken mod 1.

    Equality and hashing use the canonical form, so (2, 2) == (1, 1).
    """

    num: int
    level: int

    def __post_init__(self) -> None:
        if self.level < 0 or self.num < 0:
            raise PreconditionError(
                f"DyadicTime needs non-negative num and level, got ({self.num}, {self.level})"
            )

    @classmethod
    def from_index(cls, k: int, level: int) -> DyadicTime:
        """Grid point k of the level-`level` grid, canonicalized."""
        return canonicalize(cls(k % (1 << level), level))

    @property
    def value(self) -> float:
        # exact while level stays below the float mantissa width
        return self.num / (1 << self.level)

    def numerator_at(self, level: int) -> int:
        """Numerator of this time on the finer grid of the given level."""
        c = canonicalize(self)
        if level < c.level:
            raise PreconditionError(f"time {c} is not on the level-{level} grid")
        return c.num << (level - c.level)

    def __add__(self, other: DyadicTime) -> DyadicTime:
        level = max(self.level, other.level)
        num = (self.num << (level - self.level)) + (other.num << (level - other.level))
        return canonicalize(DyadicTime(num % (1 << level), level))

    def __sub__(self, other: DyadicTime) -> DyadicTime:
        level = max(self.level, other.level)
        num = (self.num << (level - self.level)) - (other.num << (level - other.level))
        return canonicalize(DyadicTime(num % (1 << level), level))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DyadicTime):
            return NotImplemented
        a, b = canonicalize(self), canonicalize(other)
        return a.num == b.num and a.level == b.level

    def __hash__(self) -> int:
        c = canonicalize(self)
        return hash((c.num, c.level))

    def __repr__(self) -> str:
        return f"DyadicTime({self.num}/2^{self.level})"


def canonicalize(t: DyadicTime) -> DyadicTime:
    """Reduce mod 1 and strip common factors of two: num odd, or (0, 0)."""
    num = t.num % (1 << t.level)
    if num == 0:
        return DyadicTime(0, 0)
    shift = (num & -num).bit_length() - 1
    if shift == 0 and num == t.num:
        return t
    return DyadicTime(num >> shift, t.level - shift)


def circle_dist(a: ArrayLike, b: ArrayLike) -> float | np.ndarray:
    """Distance between a and the coset b + Z on the circle R/Z, in [0, 1/2]."""
    r = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 1.0)
    out = np.minimum(r, 1.0 - r)
    return float(out) if out.ndim == 0 else out


def grid_argmin(xs: ArrayLike) -> int:
    """Index of the smallest grid value; ties go to the smallest index."""
    values = np.asarray(xs, dtype=float)
    if values.size == 0:
        raise EmptyInputError("grid_argmin needs a non-empty array")
    # np.argmin already returns the first occurrence of the minimum
    return int(np.argmin(values))


def canonicalize_many(level: int, nums: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized canonicalize for numerators on one level.

    Returns (canonical numerators, canonical levels); zero maps to (0, 0).
    """
    nums = np.mod(np.asarray(nums, dtype=np.int64), np.int64(1) << level)
    levels = np.full(nums.shape, level, dtype=np.int64)
    nonzero = nums != 0
    if np.any(nonzero):
        lowbit = nums[nonzero] & -nums[nonzero]
        # lowbit is a power of two, so frexp recovers its exponent exactly
        shift = np.frexp(lowbit.astype(np.float64))[1].astype(np.int64) - 1
        nums[nonzero] >>= shift
        levels[nonzero] -= shift
    levels[~nonzero] = 0
    return nums, levels
