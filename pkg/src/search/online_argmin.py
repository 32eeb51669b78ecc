"""
Online bisection search for the arg-min of a Brownian bridge.

Level 0 draws the bridge on the grid k/2^d and takes its arg-min t*_0.
Every further level keeps the half-width window around the previous
arg-min, stretches it back to 2^d intervals (time x2, space x sqrt 2),
fills in the new midpoints and takes the new arg-min t*_n. Certificate 1
aborts with a red-X when that arg-min leaves the central quarter
2^(d-1) +- 2^(d-3); the estimate is U_N with
U_n = U_(n-1) + (t*_n - 1/2) 2^-n.

Two sources of randomness are supported:
  standalone - fresh normals from a NormalSource, fed through bbfi;
  coupled    - every value read from a LazyBridgePath, so a full-grid
               oracle can inspect the very same path afterwards.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from typing import Annotated

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, InstanceOf

from bridge.fill_in import NoiseConvention, bbfi, init
from dyadic.bridge_store import LazyBridgePath
from dyadic.dyadic_time import DyadicTime, grid_argmin
from dyadic.noise import CountingNormals, KeyedSource, NormalSource
from search.certificate2 import IntervalMinSample, Verdict, run_certificate2
from shared.errors import GridIndexError, InsufficientEstimatesError, PreconditionError

SQRT2 = math.sqrt(2.0)


def level_scale(n: int) -> float:
    """Spatial factor 2^(n/2) between zoom level n and the original bridge."""
    return 2.0 ** (n / 2)


def certificate1_window(d: int) -> tuple[int, int]:
    """Inclusive range of arg-min indices that keep Certificate 1 green."""
    return (1 << (d - 1)) - (1 << (d - 3)), (1 << (d - 1)) + (1 << (d - 3))


class ZoomState(BaseModel):
    """Search state at zoom level n.

    values holds B^(n) on the zoom grid k/2^d; grid point k sits at global
    circle time origin + k 2^-(d+n), and values = scale * (B(global) - anchor_value).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    d: int
    values: np.ndarray
    K: int
    t_star: float
    scale: float
    origin: InstanceOf[DyadicTime]
    anchor_value: float


class RunResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    d: Annotated[int, Field(ge=3, description="Grid depth: each level holds 2^d intervals")]
    N: Annotated[int, Field(ge=1, description="Number of zoom levels requested")]
    convention: Annotated[NoiseConvention, Field(description="Midpoint noise convention")]
    coupled: Annotated[bool, Field(description="Whether values came from a shared bridge store")]
    t_stars: Annotated[
        list[float],
        Field(description="t*_0..t*_N, truncated before the abort level on a red-X"),
    ]
    U: Annotated[float, Field(ge=0.0, lt=1.0, description="Accumulated estimate U mod 1")]
    estimate_num: Annotated[int, Field(ge=0, description="Numerator of U as a dyadic time")]
    estimate_level: Annotated[int, Field(ge=0, description="Level of U as a dyadic time")]
    cert1: Annotated[Verdict, Field(description="Certificate 1 verdict")]
    abort_level: Annotated[int | None, Field(description="Level where Certificate 1 failed")] = None
    cert2: Annotated[
        Verdict | None, Field(description="Certificate 2 verdict; None when not run")
    ] = None
    cert2_abort_level: Annotated[
        int | None, Field(description="Level where Certificate 2 failed")
    ] = None
    level_arrays: Annotated[
        list[np.ndarray], Field(description="Windows hat-B^(n), n = 1.., each 2^(d-1)+1 values")
    ] = []
    fine_arrays: Annotated[
        list[np.ndarray], Field(description="Filled grids B^(n), n = 1.., each 2^d+1 values")
    ] = []
    argmin_indices: Annotated[list[int], Field(description="K(0), K(1), ... as computed")] = []
    m_samples: Annotated[
        list[IntervalMinSample], Field(description="Certificate 2 interval minima")
    ] = []
    gaussians_consumed: Annotated[int, Field(ge=0, description="Normals drawn by this run")] = 0
    final_value: Annotated[float, Field(description="Grid value at the final estimate")] = 0.0
    final_scale: Annotated[float, Field(description="Zoom scale of the final estimate's level")] = 1.0
    final_anchor: Annotated[float, Field(description="Bridge baseline of that level")] = 0.0

    @property
    def estimate(self) -> DyadicTime:
        return DyadicTime(self.estimate_num, self.estimate_level)

    @property
    def green(self) -> bool:
        """No certificate aborted."""
        return self.cert1 is Verdict.GREEN and self.cert2 is not Verdict.RED_X


# ============================================================================
# COORDINATES AND ESTIMATES
# ============================================================================

def zoom_to_global(state: ZoomState, k: int) -> DyadicTime:
    """Global circle time of zoom grid point k at the state's level."""
    if not 0 <= k <= (1 << state.d):
        raise GridIndexError(f"grid index {k} outside 0..{1 << state.d}")
    return state.origin + DyadicTime(k, state.d + state.n)


def accumulate_estimate(t_stars: Sequence[float], upto: int | None = None) -> float:
    """U_upto mod 1 from U_0 = t*_0 and U_n = U_(n-1) + (t*_n - 1/2) 2^-n."""
    upto = len(t_stars) - 1 if upto is None else upto
    if upto < 0 or len(t_stars) < upto + 1:
        raise InsufficientEstimatesError(
            f"need {upto + 1} starred times, got {len(t_stars)}"
        )
    u = float(t_stars[0])
    for n in range(1, upto + 1):
        u += (float(t_stars[n]) - 0.5) * 2.0**-n
    return u % 1.0


# ============================================================================
# LEVEL WALKS
# ============================================================================

class _StandaloneWalk:
    """Fresh normals, literal array recursion."""

    def __init__(self, normals: CountingNormals, d: int, convention: NoiseConvention):
        self.normals = normals
        self.d = d
        self.convention = convention

    @property
    def consumed(self) -> int:
        return self.normals.consumed

    def initial(self) -> ZoomState:
        xs, _ = init(self.d, self.normals, self.convention)
        K = grid_argmin(xs)
        return ZoomState(
            n=0, d=self.d, values=xs, K=K, t_star=K / (1 << self.d),
            scale=1.0, origin=DyadicTime(0, 0), anchor_value=0.0,
        )

    def advance(self, state: ZoomState) -> tuple[np.ndarray, ZoomState]:
        d, n = self.d, state.n + 1
        idx = state.K - (1 << (d - 2)) + np.arange((1 << (d - 1)) + 1)
        if state.n == 0:
            # level 0 lives on the whole circle; recentering wraps around
            idx = np.mod(idx, 1 << d)
        hat = SQRT2 * (state.values[idx] - state.values[state.K])

        fine = bbfi(1 << (d - 1), hat, self.normals, self.convention)
        K = grid_argmin(fine)
        origin = zoom_to_global(state, state.K) - DyadicTime(1, n + 1)
        anchor = state.anchor_value + state.values[state.K] / state.scale
        return hat, ZoomState(
            n=n, d=d, values=fine, K=K, t_star=K / (1 << d),
            scale=level_scale(n), origin=origin, anchor_value=anchor,
        )


class _CoupledWalk:
    """Every value is read from the shared store."""

    def __init__(self, path: LazyBridgePath, d: int):
        self.path = path
        self.d = d
        self._start = path.values_generated

    @property
    def consumed(self) -> int:
        return self.path.values_generated - self._start

    def initial(self) -> ZoomState:
        grid = self.path.refine_full(self.d)
        xs = np.append(grid, self.path.value_at(DyadicTime(0, 0)))
        K = grid_argmin(xs)
        return ZoomState(
            n=0, d=self.d, values=xs, K=K, t_star=K / (1 << self.d),
            scale=1.0, origin=DyadicTime(0, 0), anchor_value=0.0,
        )

    def advance(self, state: ZoomState) -> tuple[np.ndarray, ZoomState]:
        d, n = self.d, state.n + 1
        estimate = zoom_to_global(state, state.K)
        anchor = self.path.value_at(estimate)
        origin = estimate - DyadicTime(1, n + 1)
        scale = level_scale(n)

        level = d + n
        nums = origin.numerator_at(level) + np.arange((1 << d) + 1, dtype=np.int64)
        fine = scale * (self.path.values_at(level, nums) - anchor)
        # the window is the inherited (even) half of the new grid
        hat = fine[0::2].copy()
        K = grid_argmin(fine)
        return hat, ZoomState(
            n=n, d=d, values=fine, K=K, t_star=K / (1 << d),
            scale=scale, origin=origin, anchor_value=anchor,
        )


# ============================================================================
# BASIC ALGORITHM
# ============================================================================

def run_basic(
    d: int,
    N: int,
    path: LazyBridgePath | None = None,
    convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT,
    coupled: bool = False,
    normals: NormalSource | None = None,
    certificate2: KeyedSource | None = None,
    record_levels: bool = True,
) -> RunResult:
    """Run the zoom loop for levels n = 1..N and return the transcript.

    Args:
        d: grid depth, at least 3 so the quarter windows are whole.
        N: zoom levels; a green run carries t*_0..t*_N.
        path: the shared store (coupled mode only).
        convention: midpoint noise convention; must match the store's in coupled mode.
        coupled: read values from `path` instead of drawing fresh normals.
        normals: sequential source for standalone mode (default: fresh Generator).
        certificate2: uniform source; when given, the second certificate runs
            after every green level and a red-X aborts the run.
        record_levels: keep the per-level arrays for figure output.
    """
    if d < 3:
        raise PreconditionError("d must be ≥ 3")
    if N < 1:
        raise PreconditionError("N must be ≥ 1")

    if coupled:
        if path is None:
            raise PreconditionError("coupled mode needs a LazyBridgePath")
        if path.convention is not convention:
            raise PreconditionError(
                f"store convention {path.convention.value} differs from {convention.value}"
            )
        walk: _StandaloneWalk | _CoupledWalk = _CoupledWalk(path, d)
    else:
        source = normals if normals is not None else np.random.default_rng()
        walk = _StandaloneWalk(CountingNormals(source), d, convention)

    lo, hi = certificate1_window(d)
    state = walk.initial()
    last_green = state
    t_stars = [state.t_star]
    argmins = [state.K]
    cert1, abort_level = Verdict.GREEN, None
    cert2 = Verdict.GREEN if certificate2 is not None else None
    cert2_abort_level = None
    level_arrays: list[np.ndarray] = []
    fine_arrays: list[np.ndarray] = []
    samples: list[IntervalMinSample] = []

    for n in range(1, N + 1):
        hat, state = walk.advance(state)
        argmins.append(state.K)
        if record_levels:
            level_arrays.append(hat)
            fine_arrays.append(state.values)

        if not lo <= state.K <= hi:
            cert1, abort_level = Verdict.RED_X, n
            logger.debug("[FUNCTION run_basic] certificate 1 red-X | level={} | K={}", n, state.K)
            break
        t_stars.append(state.t_star)

        if certificate2 is not None:
            outcome = run_certificate2(state.values, state.K, d, certificate2, level=n)
            samples.extend(outcome.samples)
            if outcome.verdict is Verdict.RED_X:
                cert2, cert2_abort_level = Verdict.RED_X, n
                last_green = state
                break
        last_green = state

    estimate = zoom_to_global(last_green, last_green.K)
    result = RunResult(
        d=d,
        N=N,
        convention=convention,
        coupled=coupled,
        t_stars=t_stars,
        U=accumulate_estimate(t_stars),
        estimate_num=estimate.num,
        estimate_level=estimate.level,
        cert1=cert1,
        abort_level=abort_level,
        cert2=cert2,
        cert2_abort_level=cert2_abort_level,
        level_arrays=level_arrays,
        fine_arrays=fine_arrays,
        argmin_indices=argmins,
        m_samples=samples,
        gaussians_consumed=walk.consumed,
        final_value=float(last_green.values[last_green.K]),
        final_scale=last_green.scale,
        final_anchor=float(last_green.anchor_value),
    )
    logger.debug(
        "[FUNCTION run_basic] d={} | N={} | cert1={} | cert2={} | U={}",
        d, N, cert1.value, cert2.value if cert2 else None, result.U,
    )
    return result
