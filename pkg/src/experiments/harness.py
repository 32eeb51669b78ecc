"""
Monte Carlo harness: run the online search on keyed bridge paths and score
it against a brute-force oracle that refines the very same path.

Per-trial seeds are derive_seed(master_seed, d, N, trial), so every trial is
reproducible on its own and the stats do not depend on the worker count or
on the order in which trials finish.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from itertools import groupby
from typing import Annotated

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from bridge.fill_in import NoiseConvention
from dyadic.bridge_store import LazyBridgePath
from dyadic.dyadic_time import circle_dist, grid_argmin
from dyadic.noise import KeyedUniforms, derive_seed
from search.online_argmin import RunResult, run_basic
from shared.errors import CouplingError, TrialFailedError
from shared.settings import get_settings


# ============================================================================
# CONFIGURATION AND STATS MODELS
# ============================================================================

class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    d_list: Annotated[
        list[Annotated[int, Field(ge=3)]],
        Field(min_length=1, description="Grid depths to sweep"),
    ]
    N_list: Annotated[
        list[Annotated[int, Field(ge=1)]],
        Field(min_length=1, description="Zoom level counts to sweep"),
    ]
    trials: Annotated[int, Field(ge=1, description="Trials per (d, N) cell")]
    master_seed: Annotated[int, Field(ge=0, lt=2**64, description="Root of every trial seed")] = 0
    oracle_extra_levels: int = Field(
        default_factory=lambda: get_settings().oracle_extra_levels,
        ge=0,
        description="Oracle grid level is d + N + this",
    )
    convention: Annotated[NoiseConvention, Field(description="Midpoint noise convention")] = (
        NoiseConvention.VARIANCE_CONSISTENT
    )
    certificate2_enabled: Annotated[bool, Field(description="Run the second certificate")] = False
    workers: int = Field(
        default_factory=lambda: get_settings().workers, ge=1, description="Worker processes"
    )
    timings: Annotated[bool, Field(description="Record wall_time_s per cell")] = False
    assert_trend: Annotated[
        bool, Field(description="Require the combined failure rate to be non-increasing in d")
    ] = False
    max_failure_rate: Annotated[
        float | None,
        Field(ge=0.0, le=1.0, description="Upper limit on the combined failure rate at the largest d"),
    ] = None

    @model_validator(mode="after")
    def _check_levels(self) -> ExperimentConfig:
        deepest = max(self.d_list) + max(self.N_list) + self.oracle_extra_levels
        limit = get_settings().max_level
        if deepest > limit:
            raise ValueError(f"oracle level {deepest} exceeds the store maximum {limit}")
        return self


class ExperimentStats(BaseModel):
    """Aggregated indicators of one (d, N) cell."""

    d: int
    N: int
    trials: int
    cert1_redx_rate: float
    cert2_redx_rate: float
    dist_exceed_rate: Annotated[
        float | None, Field(description="Among green trials; None when none were green")
    ]
    mean_dist: float | None
    max_dist: float | None
    wall_time_s: float | None = None
    n_green: int | None = None
    dist_exceed_rate_unconditional: float | None = None
    combined_failure_rate: Annotated[
        float | None, Field(description="Fraction of trials with any red-X or a distance exceedance")
    ] = None


class TrialOutcome(BaseModel):
    """Indicators of one finished trial."""

    model_config = ConfigDict(frozen=True)

    d: int
    N: int
    trial: int
    cert1_redx: bool
    cert2_redx: bool
    dist: float | None
    wall_time_s: float


# ============================================================================
# SINGLE TRIAL
# ============================================================================

def verify_coupling(result: RunResult, path: LazyBridgePath) -> None:
    """The value the search holds at its estimate must be the store's value, rescaled."""
    stored = path.value_at(result.estimate)
    expected = result.final_scale * (stored - result.final_anchor)
    if expected != result.final_value:
        raise CouplingError(
            f"search value {result.final_value!r} at {result.estimate} differs from store {expected!r}"
        )


def oracle_argmin(path: LazyBridgePath, level: int) -> float:
    """Arg-min of the full level grid k/2^level, lowest index on ties."""
    return grid_argmin(path.refine_full(level)) / (1 << level)


def run_trial(
    d: int,
    N: int,
    trial_seed: int,
    config: ExperimentConfig,
    path: LazyBridgePath | None = None,
) -> tuple[RunResult, float, float | None]:
    """One coupled search plus its oracle; returns (result, u_oracle, dist or None)."""
    if path is None:
        path = LazyBridgePath.from_seed(trial_seed, config.convention)
    uniforms = KeyedUniforms(trial_seed) if config.certificate2_enabled else None

    result = run_basic(
        d, N, path, config.convention, coupled=True, certificate2=uniforms, record_levels=False
    )
    verify_coupling(result, path)

    u_oracle = oracle_argmin(path, d + N + config.oracle_extra_levels)
    dist = float(circle_dist(u_oracle, result.U)) if result.green else None
    return result, u_oracle, dist


@logger.catch(reraise=True)
def _trial_worker(job: tuple[int, int, int], config: ExperimentConfig) -> TrialOutcome:
    d, N, trial = job
    started = time.perf_counter()
    result, _, dist = run_trial(d, N, derive_seed(config.master_seed, d, N, trial), config)
    return TrialOutcome(
        d=d,
        N=N,
        trial=trial,
        cert1_redx=result.abort_level is not None,
        cert2_redx=result.cert2_abort_level is not None,
        dist=dist,
        wall_time_s=time.perf_counter() - started,
    )


# ============================================================================
# AGGREGATION
# ============================================================================

def aggregate(outcomes: list[TrialOutcome], timings: bool = False) -> list[ExperimentStats]:
    """Collapse trial outcomes into one stats row per (d, N), independent of input order."""
    ordered = sorted(outcomes, key=lambda o: (o.d, o.N, o.trial))
    rows = []
    for (d, N), group in groupby(ordered, key=lambda o: (o.d, o.N)):
        cell = list(group)
        n = len(cell)
        threshold = 2.0**-N
        dists = [o.dist for o in cell if o.dist is not None]
        exceed = sum(dist > threshold for dist in dists)
        failed = sum(o.cert1_redx or o.cert2_redx or (o.dist is not None and o.dist > threshold) for o in cell)
        rows.append(
            ExperimentStats(
                d=d,
                N=N,
                trials=n,
                cert1_redx_rate=sum(o.cert1_redx for o in cell) / n,
                cert2_redx_rate=sum(o.cert2_redx for o in cell) / n,
                dist_exceed_rate=exceed / len(dists) if dists else None,
                mean_dist=math.fsum(dists) / len(dists) if dists else None,
                max_dist=max(dists) if dists else None,
                wall_time_s=math.fsum(o.wall_time_s for o in cell) if timings else None,
                n_green=len(dists),
                dist_exceed_rate_unconditional=exceed / n,
                combined_failure_rate=failed / n,
            )
        )
    return rows


def run_experiment(config: ExperimentConfig) -> list[ExperimentStats]:
    """Run every (d, N, trial) job and aggregate one row per (d, N)."""
    jobs = [(d, N, t) for d in config.d_list for N in config.N_list for t in range(config.trials)]
    logger.info(
        "[FUNCTION run_experiment] cells={} | trials={} | workers={} | cert2={}",
        len(config.d_list) * len(config.N_list), config.trials, config.workers,
        config.certificate2_enabled,
    )
    worker = partial(_trial_worker, config=config)
    outcomes: list[TrialOutcome] = []

    if config.workers == 1:
        for job in jobs:
            try:
                outcomes.append(worker(job))
            except Exception as exc:
                raise TrialFailedError(*job, exc) from exc
    else:
        chunksize = max(1, len(jobs) // (config.workers * 8))
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = pool.map(worker, jobs, chunksize=chunksize)
            for job in jobs:
                try:
                    outcomes.append(next(results))
                except Exception as exc:
                    raise TrialFailedError(*job, exc) from exc

    rows = aggregate(outcomes, timings=config.timings)
    for row in rows:
        logger.info(
            "[FUNCTION run_experiment] d={} | N={} | cert1_redx={} | cert2_redx={} | exceed={}",
            row.d, row.N, row.cert1_redx_rate, row.cert2_redx_rate, row.dist_exceed_rate,
        )
    return rows


# ============================================================================
# ASSERTIONS
# ============================================================================

def _binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def evaluate_assertions(rows: list[ExperimentStats], config: ExperimentConfig) -> list[str]:
    """Messages for every configured assertion that fails; empty when all hold."""
    failures = []
    for N in sorted({row.N for row in rows}):
        cells = sorted((row for row in rows if row.N == N), key=lambda row: row.d)
        if config.assert_trend:
            for i, low in enumerate(cells):
                for high in cells[i + 1:]:
                    slack = 2.0 * math.hypot(
                        _binomial_sigma(low.combined_failure_rate, low.trials),
                        _binomial_sigma(high.combined_failure_rate, high.trials),
                    )
                    if high.combined_failure_rate > low.combined_failure_rate + slack:
                        failures.append(
                            f"N={N}: failure rate rises from d={low.d} ({low.combined_failure_rate}) "
                            f"to d={high.d} ({high.combined_failure_rate}) beyond 2 sigma"
                        )
        if config.max_failure_rate is not None and cells:
            top = cells[-1]
            if top.combined_failure_rate > config.max_failure_rate:
                failures.append(
                    f"N={N}: failure rate {top.combined_failure_rate} at d={top.d} "
                    f"exceeds {config.max_failure_rate}"
                )
    for message in failures:
        logger.warning("[FUNCTION evaluate_assertions] {}", message)
    return failures
