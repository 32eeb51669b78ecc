"""
Lazy Brownian bridge store on dyadic times of the circle.

Values are generated on demand by conditional midpoint sampling: the value
at an odd numerator on level L is the average of its two level-(L-1)
neighbours plus sigma_L times the keyed Gaussian for that time. Because the
Gaussian is keyed by the time itself, the realized path does not depend on
the order in which times are requested, and the online search and the
full-grid oracle can share one path.

Storage has two parts:
  - a dense grid of every k/2^G for the finest fully refined level G;
  - per-level sorted arrays for sparse times above G.
Stored values are never replaced; refining a level densely reuses them.
"""

from __future__ import annotations

import numpy as np
from loguru import logger

from bridge.fill_in import NoiseConvention, bbfi_sigma
from dyadic.dyadic_time import DyadicTime, canonicalize, canonicalize_many
from dyadic.noise import KeyedGaussians, KeyedSource
from shared.errors import LevelOverflowError
from shared.settings import get_settings


class _LevelStore:
    """Sorted odd numerators of one level and their values."""

    __slots__ = ("nums", "values")

    def __init__(self) -> None:
        self.nums = np.empty(0, dtype=np.int64)
        self.values = np.empty(0, dtype=np.float64)

    def __len__(self) -> int:
        return self.nums.size

    def lookup(self, nums: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (found mask, values); values are meaningful where found."""
        if self.nums.size == 0:
            return np.zeros(nums.shape, dtype=bool), np.zeros(nums.shape)
        pos = np.searchsorted(self.nums, nums)
        pos = np.minimum(pos, self.nums.size - 1)
        found = self.nums[pos] == nums
        return found, self.values[pos]

    def insert(self, nums: np.ndarray, values: np.ndarray) -> None:
        merged_nums = np.concatenate([self.nums, nums])
        merged_values = np.concatenate([self.values, values])
        order = np.argsort(merged_nums, kind="stable")
        self.nums = merged_nums[order]
        self.values = merged_values[order]


class LazyBridgePath:
    """One realized Brownian bridge, materialized only where it is looked at.

    Confined to a single trial and a single thread.
    """

    def __init__(
        self,
        noise: KeyedSource,
        convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT,
        max_level: int | None = None,
    ):
        self.noise = noise
        self.convention = convention
        self.max_level = max_level if max_level is not None else get_settings().max_level
        # B(0) = B(1) = 0: the level-0 grid holds both endpoints
        self._grid = np.zeros(2)
        self._grid_level = 0
        self._levels: dict[int, _LevelStore] = {}
        self._sigmas: dict[int, float] = {}
        self.max_level_touched = 0
        self.values_generated = 0

    @classmethod
    def from_seed(
        cls,
        seed: int,
        convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT,
        max_level: int | None = None,
    ) -> LazyBridgePath:
        return cls(KeyedGaussians(seed), convention, max_level)

    @property
    def grid_level(self) -> int:
        """Finest level whose whole grid is materialized."""
        return self._grid_level

    def _sigma(self, level: int) -> float:
        if level not in self._sigmas:
            self._sigmas[level] = bbfi_sigma(1 << (level - 1), self.convention)
        return self._sigmas[level]

    def _check_level(self, level: int) -> None:
        if level > self.max_level:
            raise LevelOverflowError(
                f"dyadic level {level} exceeds the configured maximum {self.max_level}"
            )

    # ------------------------------------------------------------------
    # lookups
    # ------------------------------------------------------------------

    def value_at(self, t: DyadicTime) -> float:
        """Bridge value at t, generating it (and any missing ancestors) if needed."""
        c = canonicalize(t)
        return float(self.values_at(c.level, np.array([c.num], dtype=np.int64))[0])

    def values_at(self, level: int, nums: np.ndarray) -> np.ndarray:
        """Values at the times nums / 2^level (any integers, reduced mod 1)."""
        self._check_level(level)
        nums = np.asarray(nums, dtype=np.int64)
        canon_nums, canon_levels = canonicalize_many(level, nums)
        out = np.zeros(nums.shape)
        for lev in np.unique(canon_levels):
            if lev == 0:
                continue  # pinned endpoint
            mask = canon_levels == lev
            out[mask] = self._fetch_odd(int(lev), canon_nums[mask])
        return out

    def _fetch_odd(self, level: int, nums: np.ndarray) -> np.ndarray:
        """Values for odd numerators on one level."""
        if level <= self._grid_level:
            return self._grid[nums << (self._grid_level - level)]

        store = self._levels.setdefault(level, _LevelStore())
        unique, inverse = np.unique(nums, return_inverse=True)
        found, values = store.lookup(unique)
        missing = unique[~found]
        if missing.size:
            # both neighbours live on coarser levels; fetch them first
            neighbours = self.values_at(level, np.concatenate([missing - 1, missing + 1]))
            left, right = neighbours[: missing.size], neighbours[missing.size:]
            fresh = (left + right) / 2 + self._sigma(level) * self.noise.at(level, missing)
            store.insert(missing, fresh)
            values = values.copy()
            values[~found] = fresh
            self.values_generated += int(missing.size)
            self.max_level_touched = max(self.max_level_touched, level)
        return values[inverse]

    # ------------------------------------------------------------------
    # dense refinement
    # ------------------------------------------------------------------

    def refine_full(self, L: int) -> np.ndarray:
        """Every grid value k/2^L for k = 0..2^L - 1, in index order."""
        self._check_level(L)
        while self._grid_level < L:
            level = self._grid_level + 1
            odd = np.arange(1, 1 << level, 2, dtype=np.int64)
            mids = (self._grid[:-1] + self._grid[1:]) / 2 + self._sigma(level) * self.noise.at(level, odd)

            sparse = self._levels.pop(level, None)
            fresh = odd.size
            if sparse is not None and len(sparse):
                found, stored = sparse.lookup(odd)
                mids[found] = stored[found]
                fresh -= int(found.sum())

            grid = np.empty(2 * self._grid.size - 1)
            grid[0::2] = self._grid
            grid[1::2] = mids
            self._grid = grid
            self._grid_level = level
            self.values_generated += fresh
            self.max_level_touched = max(self.max_level_touched, level)

        logger.debug("[FUNCTION refine_full] grid materialized through level {}", self._grid_level)
        step = 1 << (self._grid_level - L)
        return self._grid[:-1:step].copy()
