"""
Bessel(3) simulation as the Euclidean norm of a 3-d Brownian motion.

Grid values are exact in law (independent N(0, dt) component increments);
nothing here discretizes the Bessel SDE, so the singular drift at 0 never
enters. Large batches are advanced step by step (`Bessel3Stream`) so memory
stays proportional to the number of paths, not paths x steps.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import BaseModel, ConfigDict

from dyadic.noise import NormalSource
from search.certificate2 import sample_interval_max, sample_interval_min
from shared.errors import PreconditionError


class Bessel3Path(BaseModel):
    """Y on the grid 0, dt, ..., T; values has shape (steps+1,) or (paths, steps+1)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    dt: float
    T: float
    values: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.shape[-1]) * self.dt


def simulate_bessel3(dt: float, T: float, rng: NormalSource, paths: int | None = None) -> Bessel3Path:
    """Simulate Y = |W| for a 3-d Brownian motion W started at the origin."""
    if not 0 < dt <= T:
        raise PreconditionError(f"need 0 < dt <= T, got dt={dt}, T={T}")
    steps = max(1, int(round(T / dt)))
    shape = (steps, 3) if paths is None else (paths, steps, 3)

    increments = math.sqrt(dt) * np.asarray(rng.standard_normal(shape), dtype=float)
    positions = np.cumsum(increments, axis=-2)
    norms = np.linalg.norm(positions, axis=-1)
    start = np.zeros(norms.shape[:-1] + (1,))
    return Bessel3Path(dt=dt, T=steps * dt, values=np.concatenate([start, norms], axis=-1))


def open_uniforms(rng: np.random.Generator, shape: int | tuple[int, ...]) -> np.ndarray:
    """Uniforms strictly inside (0, 1)."""
    return np.clip(rng.random(shape), 2.0**-54, 1.0 - 2.0**-53)


class Bessel3Stream:
    """A batch of 3-d Brownian positions advanced one step at a time."""

    def __init__(self, rng: np.random.Generator, paths: int, start_time: float = 0.0):
        self.rng = rng
        self.time = start_time
        # W(start_time) ~ N(0, start_time I) exactly
        self.positions = math.sqrt(start_time) * rng.standard_normal((paths, 3))

    @property
    def radius(self) -> np.ndarray:
        return np.linalg.norm(self.positions, axis=1)

    def step(self, dt: float) -> np.ndarray:
        self.positions += math.sqrt(dt) * self.rng.standard_normal(self.positions.shape)
        self.time += dt
        return self.radius

    def jump_to(self, time: float) -> np.ndarray:
        """Advance straight to a later time in one exact Gaussian step."""
        if time > self.time:
            self.step(time - self.time)
        return self.radius


def _step_count(span: float, dt: float) -> tuple[int, float]:
    steps = max(1, int(math.ceil(span / dt - 1e-9)))
    return steps, span / steps


def tail_hit_probability(
    stream: Bessel3Stream,
    z: float | np.ndarray,
    horizon: float,
    dt: float,
    bridge_correction: bool = True,
    tail_closure: bool = True,
) -> np.ndarray:
    """Per-path P(min of Y after the stream's current time <= z).

    Scans the grid up to `horizon`. With bridge_correction, each step between
    grid values a, b > z is crossed with probability exp(-2(a-z)(b-z)/dt).
    With tail_closure, a path still above z at the horizon reaches z later
    with probability z / Y(horizon). With both off this is the plain
    indicator that the grid minimum is <= z.
    """
    prev = stream.radius
    hit = prev <= z
    survive = np.ones(prev.shape)
    steps, h = _step_count(horizon - stream.time, dt) if horizon > stream.time else (0, dt)
    for _ in range(steps):
        cur = stream.step(h)
        hit |= cur <= z
        if bridge_correction:
            gap = np.maximum((prev - z) * (cur - z), 0.0)
            survive *= 1.0 - np.exp(-2.0 * gap / h)
        prev = cur
    if tail_closure:
        survive *= 1.0 - np.minimum(z / np.maximum(prev, 1e-300), 1.0)
    return np.where(hit, 1.0, 1.0 - survive)


def tail_min_samples(
    stream: Bessel3Stream,
    horizon: float,
    dt: float,
    bridge_correction: bool = True,
    tail_closure: bool = True,
) -> np.ndarray:
    """Samples of the minimum of Y after the stream's current time.

    Within a step the minimum is drawn from the Brownian bridge law given the
    two radii; beyond the horizon, min(Y) is Y(horizon) times a uniform.
    """
    rng = stream.rng
    prev = stream.radius
    low = prev.copy()
    steps, h = _step_count(horizon - stream.time, dt) if horizon > stream.time else (0, dt)
    for _ in range(steps):
        cur = stream.step(h)
        if bridge_correction:
            low = np.minimum(low, sample_interval_min(prev, cur, h, open_uniforms(rng, prev.shape)))
        else:
            low = np.minimum(low, cur)
        prev = cur
    if tail_closure:
        low = np.minimum(low, prev * open_uniforms(rng, prev.shape))
    return low


def running_max_samples(
    stream: Bessel3Stream,
    until: float,
    dt: float,
    bridge_correction: bool = True,
) -> np.ndarray:
    """Samples of max Y over [stream time, until], with optional in-step bridge maxima."""
    rng = stream.rng
    prev = stream.radius
    high = prev.copy()
    steps, h = _step_count(until - stream.time, dt)
    for _ in range(steps):
        cur = stream.step(h)
        if bridge_correction:
            high = np.maximum(high, sample_interval_max(prev, cur, h, open_uniforms(rng, prev.shape)))
        else:
            high = np.maximum(high, cur)
        prev = cur
    return high


def brownian_max_samples(rng: np.random.Generator, paths: int, until: float, dt: float) -> np.ndarray:
    """Exact samples of max W over [0, until] for a 1-d Brownian motion W(0) = 0.

    The grid walk plus a reflection-principle bridge maximum per step is
    exact in law for any step size.
    """
    steps, h = _step_count(until, dt)
    prev = np.zeros(paths)
    high = np.zeros(paths)
    for _ in range(steps):
        cur = prev + math.sqrt(h) * rng.standard_normal(paths)
        high = np.maximum(high, sample_interval_max(prev, cur, h, open_uniforms(rng, paths)))
        prev = cur
    return high
