"""Vervaat transform of grid Brownian bridges."""

import numpy as np
from numpy.typing import ArrayLike

from dyadic.dyadic_time import grid_argmin
from shared.errors import EmptyInputError, EndpointMismatchError


def vervaat_transform(xs: ArrayLike) -> np.ndarray:
    """Cyclically shift a bridge so its minimum sits at both ends.

    e_k = x_{(K + k) mod n} - x_K with K the first arg-min over the n = len-1
    intervals. Accepts one bridge (shape (n+1,)) or a batch (shape (B, n+1)).
    The result is nonnegative and zero at k = 0 and k = n.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.shape[-1] < 2:
        raise EmptyInputError("a bridge needs at least two grid values")
    if not np.array_equal(xs[..., 0], xs[..., -1]):
        raise EndpointMismatchError("bridge endpoints differ; not a closed path")

    if xs.ndim == 1:
        n = xs.size - 1
        K = grid_argmin(xs)
        idx = (K + np.arange(n + 1)) % n
        return xs[idx] - xs[K]

    n = xs.shape[-1] - 1
    K = np.argmin(xs[..., :n], axis=-1)
    idx = (K[..., None] + np.arange(n + 1)) % n
    shifted = np.take_along_axis(xs, idx, axis=-1)
    return shifted - np.take_along_axis(xs, K[..., None], axis=-1)
