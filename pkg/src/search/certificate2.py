"""
Second certificate: sample the true minimum of the bridge inside each outer
grid interval and flag a red-X when one reaches the observed grid minimum.

Given the endpoint values x, y of an interval of width h, the conditional
law of the path minimum comes from the reflection principle:

    P(min <= z) = 1                              if z >= min(x, y)
                = exp(-2 (z - x)(z - y) / h)     otherwise

and inverting it at a uniform u gives an exact sample of the minimum.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict

from dyadic.noise import KeyedSource
from shared.errors import GridIndexError, LengthMismatchError, PreconditionError


class Verdict(str, Enum):
    GREEN = "green"
    RED_X = "red-x"


class IntervalMinSample(BaseModel):
    """One sampled interval minimum; the interval is (t_{k-1}, t_k) at zoom level `level`."""

    model_config = ConfigDict(frozen=True)

    level: int
    k: int
    x: float
    y: float
    u: float
    m: float


class Certificate2Outcome(BaseModel):
    verdict: Verdict
    samples: list[IntervalMinSample] = []
    failed_interval: int | None = None


def _scalar_or_array(out: np.ndarray) -> float | np.ndarray:
    return float(out) if out.ndim == 0 else out


def interval_min_cdf(x: ArrayLike, y: ArrayLike, z: ArrayLike, h: ArrayLike) -> float | np.ndarray:
    """P(min over the interval <= z | endpoint values x, y), interval width h."""
    x, y, z, h = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, z, h)))
    if np.any(h <= 0):
        raise PreconditionError("interval width h must be positive")

    out = np.ones(z.shape)
    below = z < np.minimum(x, y)
    out[below] = np.exp(-2.0 * (z[below] - x[below]) * (z[below] - y[below]) / h[below])
    return _scalar_or_array(out)


def sample_interval_min(x: ArrayLike, y: ArrayLike, h: ArrayLike, u: ArrayLike) -> float | np.ndarray:
    """Invert interval_min_cdf at u in (0, 1).

    Evaluates (x+y)/2 - sqrt((x-y)^2/4 - h ln(u)/2) in the cancellation-free
    form min(x, y) - q / (|x-y|/2 + sqrt((x-y)^2/4 + q)) with q = -h ln(u)/2,
    which is the same root and never exceeds min(x, y).
    """
    x, y, h, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, y, h, u)))
    if np.any(h <= 0):
        raise PreconditionError("interval width h must be positive")
    if np.any((u <= 0.0) | (u >= 1.0)):
        raise PreconditionError("u must lie strictly inside (0, 1)")

    half_gap = np.abs(x - y) / 2
    q = -h * np.log(u) / 2
    denom = half_gap + np.sqrt(half_gap * half_gap + q)
    drop = np.divide(q, denom, out=np.zeros(q.shape), where=denom > 0)
    return _scalar_or_array(np.minimum(x, y) - drop)


def sample_interval_max(x: ArrayLike, y: ArrayLike, h: ArrayLike, u: ArrayLike) -> float | np.ndarray:
    """Mirror image of sample_interval_min: exact bridge maximum given the endpoints."""
    m = sample_interval_min(-np.asarray(x, dtype=float), -np.asarray(y, dtype=float), h, u)
    return -m


def outer_intervals(d: int) -> np.ndarray:
    """Interval indices k in 1..2^d outside the middle half of the grid."""
    k = np.arange(1, (1 << d) + 1)
    lo = 1 << (d - 2)
    hi = lo + (1 << (d - 1))
    return k[~((k - 1 >= lo) & (k <= hi))]


def run_certificate2(
    values: ArrayLike,
    K: int,
    d: int,
    uniforms: KeyedSource,
    level: int = 0,
) -> Certificate2Outcome:
    """Check the outer intervals of one level's grid against its minimum.

    Interval k is tested unless both its endpoints sit in the middle window
    [2^(d-2), 2^(d-2) + 2^(d-1)], which the next zoom re-examines. The first
    sampled m <= values[K] turns the verdict red-X; samples up to and
    including that one are returned.
    """
    grid = np.asarray(values, dtype=float)
    size = 1 << d
    if d < 2:
        raise PreconditionError(f"certificate 2 needs d >= 2, got {d}")
    if grid.shape != (size + 1,):
        raise LengthMismatchError(f"expected {size + 1} grid values, got {grid.shape}")
    if not 0 <= K <= size:
        raise GridIndexError(f"K={K} outside 0..{size}")

    ks = outer_intervals(d)
    x, y = grid[ks - 1], grid[ks]
    u = np.asarray(uniforms.at(level, ks), dtype=float)
    m = np.asarray(sample_interval_min(x, y, 2.0**-d, u))

    hits = np.flatnonzero(m <= grid[K])
    stop = int(hits[0]) + 1 if hits.size else ks.size
    samples = [
        IntervalMinSample(
            level=level, k=int(ks[i]), x=float(x[i]), y=float(y[i]), u=float(u[i]), m=float(m[i])
        )
        for i in range(stop)
    ]

    if hits.size:
        failed = int(ks[hits[0]])
        logger.debug(
            "[FUNCTION run_certificate2] red-X | level={} | interval={} | m={} | grid_min={}",
            level, failed, float(m[hits[0]]), float(grid[K]),
        )
        return Certificate2Outcome(verdict=Verdict.RED_X, samples=samples, failed_interval=failed)
    return Certificate2Outcome(verdict=Verdict.GREEN, samples=samples)
