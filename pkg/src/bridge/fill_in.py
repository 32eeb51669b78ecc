"""
Brownian bridge fill-in (midpoint displacement) and the depth-d initialization.

Arrays may carry leading batch dimensions: the last axis is the path, so
`init(d, rng, paths=1000)` draws a thousand bridges at once. A NormalSource
is consumed in row-major order, i.e. midpoint index order k = 1..n per path.
"""

import math
from enum import Enum

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike

from dyadic.noise import NormalSource
from shared.errors import LengthMismatchError, LevelOverflowError, PreconditionError
from shared.settings import get_settings


class NoiseConvention(str, Enum):
    """Midpoint noise scale used by the fill-in.

    VARIANCE_CONSISTENT draws with std 1/(2 sqrt n) (conditional variance gap/4);
    PAPER_LITERAL uses the coefficient 1/sqrt(2n), which doubles
    every variance.
    """

    VARIANCE_CONSISTENT = "variance-consistent"
    PAPER_LITERAL = "paper-literal"


def bbfi_sigma(n: int, convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT) -> float:
    """Midpoint standard deviation when refining n intervals of width 1/n.

    The bridge store uses this same function (with n = 2^(L-1) at level L) so
    coupled and array fill-ins agree bit for bit.
    """
    if convention is NoiseConvention.PAPER_LITERAL:
        return math.sqrt(0.5 / n)
    return 0.5 / math.sqrt(n)


def bbfi(
    n: int,
    xs: ArrayLike,
    noise: NormalSource,
    convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT,
) -> np.ndarray:
    """Refine n intervals (n+1 values) into 2n intervals (2n+1 values).

    Even outputs copy the inputs exactly; odd outputs are the neighbour
    average plus sigma times one fresh normal, consumed in index order.
    """
    values = np.asarray(xs, dtype=float)
    if n < 1 or values.ndim == 0 or values.shape[-1] != n + 1:
        got = values.shape[-1] if values.ndim else 0
        raise LengthMismatchError(f"bbfi needs n >= 1 and n+1 = {n + 1} values, got {got}")

    out = np.empty(values.shape[:-1] + (2 * n + 1,))
    out[..., 0::2] = values
    g = np.asarray(noise.standard_normal(values.shape[:-1] + (n,)), dtype=float)
    out[..., 1::2] = (values[..., :-1] + values[..., 1:]) / 2 + bbfi_sigma(n, convention) * g
    return out


def init(
    d: int,
    noise: NormalSource,
    convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT,
    paths: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Depth-d bridge on the grid k/2^d: returns (xs, ts), each of length 2^d + 1.

    Starts from the pinned pair [0, 0] and applies bbfi d times; round r
    passes 2^(r-1) intervals. With `paths`, xs has shape (paths, 2^d + 1).
    """
    if d < 1:
        raise PreconditionError(f"init needs d >= 1, got {d}")
    max_level = get_settings().max_level
    if d > max_level:
        raise LevelOverflowError(f"init depth {d} exceeds the maximum level {max_level}")

    shape = (2,) if paths is None else (paths, 2)
    xs = np.zeros(shape)
    for r in range(1, d + 1):
        xs = bbfi(1 << (r - 1), xs, noise, convention)

    ts = np.arange((1 << d) + 1) / (1 << d)
    logger.debug("[FUNCTION init] built depth-{} bridge grid | paths={}", d, paths or 1)
    return xs, ts
