"""
Randomness sources for the bridge store, the fill-in function and the
second certificate.

Keyed sources are counter-based: the variate for a key (level, index) is a
pure function of (seed, stream, level, index), computed with the SplitMix64
output function. Coupled runs, the brute-force oracle and any worker count
therefore see the same numbers regardless of request order.

Sequential sources follow numpy's Generator interface (`standard_normal`),
so a plain `np.random.default_rng(seed)` can be passed anywhere a
NormalSource is expected. The scripted/table variants exist for injecting
exact noise values.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from typing import Protocol, runtime_checkable

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)

# Separate streams so Gaussians and uniforms from one seed never share counters
GAUSSIAN_STREAM = 1
UNIFORM_STREAM = 2

# (level << 42) | index stays unique for levels < 2^22 and indices < 2^42
_LEVEL_SHIFT = np.uint64(42)


# ============================================================================
# SPLITMIX64 HELPERS
# ============================================================================

def _mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MUL1
        z = (z ^ (z >> np.uint64(27))) * _MUL2
        return z ^ (z >> np.uint64(31))


def splitmix64(x: int) -> int:
    """One SplitMix64 step on a Python integer."""
    state = np.array([(x + 0x9E3779B97F4A7C15) & _MASK64], dtype=np.uint64)
    return int(_mix64(state)[0])


def derive_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed; stable across platforms and runs."""
    h = 0
    for part in parts:
        h = splitmix64(h ^ (int(part) & _MASK64))
    return h


def _counter_bits(key: int, level: int, index: np.ndarray) -> np.ndarray:
    """64 random bits for each (level, index) under the given stream key."""
    counter = (np.uint64(level) << _LEVEL_SHIFT) | np.asarray(index, dtype=np.int64).astype(np.uint64)
    with np.errstate(over="ignore"):
        # SplitMix64 output for position `counter` of the stream seeded by `key`
        state = np.uint64(key) + (counter + np.uint64(1)) * _GOLDEN
    return _mix64(np.atleast_1d(state))


def _open_unit(bits: np.ndarray) -> np.ndarray:
    """Map 64-bit integers to doubles strictly inside (0, 1)."""
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# ============================================================================
# SOURCE PROTOCOLS
# ============================================================================

@runtime_checkable
class NormalSource(Protocol):
    """Sequential standard-normal source; numpy's Generator satisfies it."""

    def standard_normal(self, size: int | tuple[int, ...]) -> np.ndarray: ...


@runtime_checkable
class KeyedSource(Protocol):
    """Variates addressed by (level, index) rather than by draw order."""

    def at(self, level: int, index: np.ndarray) -> np.ndarray: ...


# ============================================================================
# KEYED SOURCES
# ============================================================================

class KeyedGaussians:
    """Standard normals keyed by a canonical dyadic time (level, odd numerator)."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._key = derive_seed(self.seed, GAUSSIAN_STREAM)

    def at(self, level: int, index: np.ndarray) -> np.ndarray:
        return ndtri(_open_unit(_counter_bits(self._key, level, np.atleast_1d(index))))

    def __repr__(self) -> str:
        return f"KeyedGaussians(seed={self.seed})"


class KeyedUniforms:
    """Uniform(0, 1) variates keyed by (zoom level, interval index)."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._key = derive_seed(self.seed, UNIFORM_STREAM)

    def at(self, level: int, index: np.ndarray) -> np.ndarray:
        return _open_unit(_counter_bits(self._key, level, np.atleast_1d(index)))

    def __repr__(self) -> str:
        return f"KeyedUniforms(seed={self.seed})"


class TableGaussians:
    """Injected keyed Gaussians: explicit (num, level) entries, default elsewhere."""

    def __init__(self, table: Mapping[tuple[int, int], float] | None = None, default: float = 0.0):
        self.table = dict(table or {})
        self.default = float(default)

    def at(self, level: int, index: np.ndarray) -> np.ndarray:
        return np.array(
            [self.table.get((int(num), level), self.default) for num in np.atleast_1d(index)],
            dtype=float,
        )


class ConstantUniforms:
    """Every uniform equals u; used to force certificate outcomes."""

    def __init__(self, u: float):
        self.u = float(u)

    def at(self, level: int, index: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_1d(index).shape, self.u)


# ============================================================================
# SEQUENTIAL SOURCES
# ============================================================================

class ScriptedNormals:
    """Hands out a fixed script of normals in order, then `fill` forever."""

    def __init__(self, values: Iterable[float] = (), fill: float = 0.0):
        self._values = [float(v) for v in values]
        self._pos = 0
        self.fill = float(fill)

    @property
    def consumed(self) -> int:
        return self._pos

    def standard_normal(self, size: int | tuple[int, ...]) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        chunk = self._values[self._pos:self._pos + count]
        chunk += [self.fill] * (count - len(chunk))
        self._pos += count
        return np.array(chunk, dtype=float).reshape(shape)


class CountingNormals:
    """Wraps a NormalSource and counts how many normals were drawn."""

    def __init__(self, source: NormalSource):
        self.source = source
        self.consumed = 0

    def standard_normal(self, size: int | tuple[int, ...]) -> np.ndarray:
        draws = np.asarray(self.source.standard_normal(size), dtype=float)
        self.consumed += draws.size
        return draws
