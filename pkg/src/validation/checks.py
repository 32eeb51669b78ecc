"""
Statistical checks for the bridge generator, the second certificate and the
Bessel(3) facts the search relies on.

Every check takes its sizes and a numpy Generator explicitly and returns a
CheckResult; nothing here reads configuration. Large simulations run in
chunks of `chunk` paths so memory stays bounded.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from typing import Annotated

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import stats
from scipy.special import ndtr

from bridge.fill_in import NoiseConvention, init
from dyadic.bridge_store import LazyBridgePath
from dyadic.dyadic_time import grid_argmin
from dyadic.noise import KeyedGaussians, KeyedUniforms, ScriptedNormals, derive_seed
from search.certificate2 import interval_min_cdf, run_certificate2, sample_interval_min
from shared.errors import PreconditionError
from validation.bessel import (
    Bessel3Stream,
    brownian_max_samples,
    open_uniforms,
    running_max_samples,
    simulate_bessel3,
    tail_hit_probability,
    tail_min_samples,
)
from validation.vervaat import vervaat_transform

SQRT_2PI = math.sqrt(2.0 * math.pi)
BESSEL3_MEAN_AT_1 = 2.0 * math.sqrt(2.0 / math.pi)

Detail = float | int | str | bool | None


class CheckResult(BaseModel):
    """One line of a validation report; serializes `passed` as "pass"."""

    model_config = ConfigDict(populate_by_name=True)

    name: Annotated[str, Field(description="Stable check identifier")]
    empirical: Annotated[float | None, Field(description="Simulated statistic")]
    analytic_or_bound: Annotated[
        float | None, Field(description="Exact value, bound or significance it is compared to")
    ]
    tolerance: Annotated[float | None, Field(description="Allowed deviation, if any")]
    passed: Annotated[bool, Field(alias="pass", description="Verdict of the check")]
    details: Annotated[dict[str, Detail], Field(description="Extra diagnostics")] = {}


class CorollaryParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    eps: Annotated[float, Field(gt=0, description="Length of the initial window [0, eps]")]
    a: Annotated[float, Field(gt=0, description="Start of the tail window [a, infinity)")]
    lam: Annotated[float, Field(gt=0, alias="lambda", description="Square of the max multiplier")]

    @model_validator(mode="after")
    def _check_ratio(self) -> CorollaryParams:
        if self.a <= self.eps:
            raise ValueError(f"a must exceed eps, got a={self.a}, eps={self.eps}")
        if self.a / (self.eps * self.lam) <= 1.0:
            raise ValueError("a / (eps * lambda) must exceed 1 for the bound to be defined")
        return self


def _chunks(total: int, chunk: int) -> Iterator[int]:
    if total < 1:
        raise PreconditionError(f"need at least one trial, got {total}")
    done = 0
    while done < total:
        size = min(chunk, total - done)
        yield size
        done += size


def _result(name: str, empirical, bound, tolerance, passed: bool, **details) -> CheckResult:
    result = CheckResult(
        name=name,
        empirical=None if empirical is None else float(empirical),
        analytic_or_bound=None if bound is None else float(bound),
        tolerance=None if tolerance is None else float(tolerance),
        passed=bool(passed),
        details=details,
    )
    logger.info(
        "[FUNCTION {}] {} | empirical={} | reference={}",
        name, "pass" if result.passed else "FAIL", result.empirical, result.analytic_or_bound,
    )
    return result


# ============================================================================
# CLOSED FORMS
# ============================================================================

def lemma_tail_min_probability(z: float) -> float:
    """P(min of Y over [1, infinity) <= z) = 2 Phi(z) - 1."""
    return float(2.0 * ndtr(z) - 1.0)


def max_bound(z: float) -> float:
    """Displayed upper bound 18 exp(-z^2/18) / (z sqrt(2 pi)) on P(max_[0,1] Y >= z)."""
    return 18.0 * math.exp(-z * z / 18.0) / (z * SQRT_2PI)


def max_bound_intermediate(z: float) -> float:
    """The tighter intermediate bound 6 P(N(0,1) > z/3)."""
    return float(6.0 * stats.norm.sf(z / 3.0))


def corollary_bound(params: CorollaryParams) -> float:
    """(1/3) sqrt((2 eps lam / (pi a)) ln(a / (eps lam)))."""
    ratio = params.eps * params.lam / params.a
    return math.sqrt(2.0 * ratio / math.pi * math.log(1.0 / ratio)) / 3.0


def corollary_subset_bound(params: CorollaryParams, grid: int = 20001) -> float:
    """Best threshold split of the event into the tail-min and running-max bounds.

    For any z: P <= P(min_[a,inf) Y <= sqrt(lam) z) + P(max_[0,eps] Y >= z),
    with the first term exact and the second bounded by 6 P(N > z/(3 sqrt eps)).
    """
    z = np.linspace(1e-6, 15.0, grid) * math.sqrt(params.eps)
    tail = 2.0 * ndtr(np.sqrt(params.lam) * z / math.sqrt(params.a)) - 1.0
    head = np.minimum(1.0, 6.0 * stats.norm.sf(z / (3.0 * math.sqrt(params.eps))))
    return float(np.min(tail + head))


# ============================================================================
# BRIDGE GENERATOR
# ============================================================================

def _bridge_columns(
    paths: int, d: int, rng: np.random.Generator, convention: NoiseConvention, chunk: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-column sums and squares of whole grids plus samples at 1/4, 1/2, 3/4."""
    size = 1 << d
    cols = [size // 4, size // 2, 3 * size // 4]
    total = np.zeros(size + 1)
    squares = np.zeros(size + 1)
    picked = []
    for batch in _chunks(paths, chunk):
        xs, _ = init(d, rng, convention, paths=batch)
        total += xs.sum(axis=0)
        squares += (xs * xs).sum(axis=0)
        picked.append(xs[:, cols])
    return total, squares, np.concatenate(picked)


def bridge_covariance_check(
    paths: int,
    d: int,
    rng: np.random.Generator,
    convention: NoiseConvention = NoiseConvention.VARIANCE_CONSISTENT,
    chunk: int = 5000,
) -> CheckResult:
    """Var at 1/2 in [0.24, 0.26], Cov(1/4, 3/4) in [0.0525, 0.0725], and the
    3x3 covariance at {1/4, 1/2, 3/4} within 0.01 of min(s, t) - st."""
    _, _, picked = _bridge_columns(paths, d, rng, convention, chunk)
    cov = np.cov(picked, rowvar=False)
    s = np.array([0.25, 0.5, 0.75])
    target = np.minimum.outer(s, s) - np.outer(s, s)

    var_half, cov_outer = cov[1, 1], cov[0, 2]
    worst = float(np.max(np.abs(cov - target)))
    passed = 0.24 <= var_half <= 0.26 and 0.0525 <= cov_outer <= 0.0725 and worst <= 0.01
    return _result(
        "bridge_covariance", var_half, 0.25, 0.01, passed,
        cov_quarter_three_quarter=float(cov_outer), max_abs_deviation=worst, paths=paths, d=d,
    )


def bridge_marginal_check(
    paths: int,
    d: int,
    rng: np.random.Generator,
    tolerance: float = 0.0125,
    chunk: int = 5000,
) -> CheckResult:
    """Var B(t_k) within tolerance of t_k (1 - t_k) at every grid point."""
    total, squares, _ = _bridge_columns(paths, d, rng, NoiseConvention.VARIANCE_CONSISTENT, chunk)
    mean = total / paths
    var = (squares - paths * mean * mean) / (paths - 1)
    ts = np.arange((1 << d) + 1) / (1 << d)
    worst = float(np.max(np.abs(var - ts * (1.0 - ts))))
    return _result(
        "bridge_marginal_variance", worst, 0.0, tolerance, worst <= tolerance, paths=paths, d=d,
    )


def paper_literal_variance_check(paths: int, d: int, rng: np.random.Generator, chunk: int = 5000) -> CheckResult:
    """The paper-literal coefficient doubles the variance: Var B(1/2) in [0.48, 0.52]."""
    _, _, picked = _bridge_columns(paths, d, rng, NoiseConvention.PAPER_LITERAL, chunk)
    var_half = float(np.var(picked[:, 1], ddof=1))
    return _result(
        "paper_literal_variance", var_half, 0.5, 0.02, 0.48 <= var_half <= 0.52, paths=paths, d=d,
    )


def store_covariance_check(paths: int, rng: np.random.Generator) -> CheckResult:
    """Covariance of lazily generated store values at 1/4, 1/2, 3/4."""
    base = int(rng.integers(0, 2**63))
    picked = np.empty((paths, 3))
    for i in range(paths):
        store = LazyBridgePath.from_seed(derive_seed(base, i))
        picked[i] = store.values_at(2, np.array([1, 2, 3], dtype=np.int64))
    cov = np.cov(picked, rowvar=False)
    s = np.array([0.25, 0.5, 0.75])
    worst = float(np.max(np.abs(cov - (np.minimum.outer(s, s) - np.outer(s, s)))))
    return _result("store_covariance", worst, 0.0, 0.01, worst <= 0.01, paths=paths)


def store_matches_init_check(d: int, seeds: int, rng: np.random.Generator) -> CheckResult:
    """refine_full(d) equals init(d) fed the same keyed normals in draw order, bit for bit."""
    mismatches = 0
    for _ in range(seeds):
        seed = int(rng.integers(0, 2**63))
        keyed = KeyedGaussians(seed)
        script = np.concatenate(
            [keyed.at(r, np.arange(1, 1 << r, 2, dtype=np.int64)) for r in range(1, d + 1)]
        )
        xs, _ = init(d, ScriptedNormals(script))
        grid = LazyBridgePath(keyed).refine_full(d)
        if not np.array_equal(xs[:-1], grid):
            mismatches += 1
    return _result("store_matches_init", mismatches, 0, 0, mismatches == 0, seeds=seeds, d=d)


# ============================================================================
# SECOND CERTIFICATE
# ============================================================================

def reflection_roundtrip_check(samples: int, rng: np.random.Generator, tolerance: float = 1e-9) -> CheckResult:
    """|F(sample(u)) - u| <= tolerance for random (x, y, h, u)."""
    x = rng.uniform(-1.0, 1.0, samples)
    y = rng.uniform(-1.0, 1.0, samples)
    h = rng.uniform(0.01, 1.0, samples)
    u = open_uniforms(rng, samples)
    m = sample_interval_min(x, y, h, u)
    worst = float(np.max(np.abs(interval_min_cdf(x, y, m, h) - u)))
    return _result("reflection_roundtrip", worst, 0.0, tolerance, worst <= tolerance, samples=samples)


def interval_min_ks_check(samples: int, rng: np.random.Generator, alpha: float = 0.01) -> CheckResult:
    """With x = y = 0 and h = 1 the sampled minimum has CDF exp(-2 z^2), z < 0."""
    m = sample_interval_min(0.0, 0.0, 1.0, open_uniforms(rng, samples))
    test = stats.kstest(m, lambda z: np.where(z < 0, np.exp(-2.0 * z * z), 1.0))
    return _result(
        "interval_min_ks", test.pvalue, alpha, None, test.pvalue > alpha,
        statistic=float(test.statistic), samples=samples,
    )


def interval_min_monotone_check(samples: int, rng: np.random.Generator) -> CheckResult:
    """The sampled minimum is non-decreasing in u for fixed endpoints."""
    x, y = rng.normal(size=2)
    h = float(rng.uniform(0.01, 1.0))
    u = np.unique(open_uniforms(rng, samples))
    m = sample_interval_min(x, y, h, u)
    drops = int(np.count_nonzero(np.diff(m) < 0))
    return _result("interval_min_monotone", drops, 0, 0, drops == 0, samples=int(u.size))


def certificate2_shift_check(
    grids: int, d: int, rng: np.random.Generator, shift: float = 0.75
) -> CheckResult:
    """Adding a constant to a whole grid leaves the verdict unchanged."""
    xs, _ = init(d, rng, paths=grids)
    mismatches = 0
    for i, values in enumerate(xs):
        uniforms = KeyedUniforms(int(rng.integers(0, 2**63)))
        K = grid_argmin(values)
        plain = run_certificate2(values, K, d, uniforms, level=i)
        moved = run_certificate2(values + shift, K, d, uniforms, level=i)
        if (plain.verdict, plain.failed_interval) != (moved.verdict, moved.failed_interval):
            mismatches += 1
    return _result("certificate2_shift_invariance", mismatches, 0, 0, mismatches == 0, grids=grids, d=d)


# ============================================================================
# BESSEL(3)
# ============================================================================

def bessel_mean_check(paths: int, rng: np.random.Generator, tolerance: float = 0.02) -> CheckResult:
    """E[Y(1)] = 2 sqrt(2/pi)."""
    path = simulate_bessel3(1.0, 1.0, rng, paths=paths)
    mean = float(path.values[:, -1].mean())
    return _result(
        "bessel_mean", mean, BESSEL3_MEAN_AT_1, tolerance,
        abs(mean - BESSEL3_MEAN_AT_1) <= tolerance, paths=paths,
    )


def bessel_scaling_check(
    paths: int, rng: np.random.Generator, c: float = 4.0, alpha: float = 0.01
) -> CheckResult:
    """c^(-1/2) Y(c) has the law of Y(1), and both match the chi(3) law."""
    scaled = simulate_bessel3(c / 4, c, rng, paths=paths).values[:, -1] / math.sqrt(c)
    unit = simulate_bessel3(0.25, 1.0, rng, paths=paths).values[:, -1]
    pair = stats.ks_2samp(scaled, unit)
    chi = stats.kstest(unit, stats.chi(3).cdf)
    return _result(
        "bessel_scaling", pair.pvalue, alpha, None, pair.pvalue > alpha and chi.pvalue > alpha,
        chi3_pvalue=float(chi.pvalue), c=c, paths=paths,
    )


def lemma_tail_min_check(
    z: float,
    trials: int,
    dt: float,
    T: float,
    rng: np.random.Generator,
    tolerance: float = 0.015,
    bridge_correction: bool = True,
    tail_closure: bool = True,
    chunk: int = 20000,
) -> CheckResult:
    """P(min of Y over [1, T] <= z) against 2 Phi(z) - 1, plus the bound 2z/sqrt(2 pi).

    With both corrections off the estimate is the literal fraction of grid
    paths, biased low by the step and by the finite horizon.
    """
    if z <= 0:
        raise PreconditionError(f"z must be positive, got {z}")
    if not 0 < dt <= T - 1.0:
        raise PreconditionError(f"need 0 < dt <= T - 1, got dt={dt}, T={T}")

    hits = 0.0
    for batch in _chunks(trials, chunk):
        stream = Bessel3Stream(rng, batch, start_time=1.0)
        hits += float(tail_hit_probability(stream, z, T, dt, bridge_correction, tail_closure).sum())
    empirical = hits / trials
    analytic = lemma_tail_min_probability(z)
    linear = 2.0 * z / SQRT_2PI
    passed = abs(empirical - analytic) <= tolerance and analytic <= linear
    return _result(
        f"lemma_tail_min_z{z:g}", empirical, analytic, tolerance, passed,
        linear_bound=linear, dt=dt, T=T, trials=trials,
        bridge_correction=bridge_correction, tail_closure=tail_closure,
    )


def max_bound_check(
    z: float,
    trials: int,
    dt: float,
    rng: np.random.Generator,
    bridge_correction: bool = True,
    chunk: int = 20000,
) -> CheckResult:
    """P(max of Y over [0, 1] >= z) below 6 P(N > z/3) and the closed-form bound."""
    if z <= 0:
        raise PreconditionError(f"z must be positive, got {z}")
    above = 0
    for batch in _chunks(trials, chunk):
        high = running_max_samples(Bessel3Stream(rng, batch), 1.0, dt, bridge_correction)
        above += int(np.count_nonzero(high >= z))
    empirical = above / trials
    bound = max_bound(z)
    intermediate = max_bound_intermediate(z)
    return _result(
        f"max_bound_z{z:g}", empirical, bound, None, empirical <= intermediate <= bound,
        intermediate_bound=intermediate, dt=dt, trials=trials,
    )


def corollary_bound_check(
    params: CorollaryParams,
    trials: int,
    dt: float,
    T: float,
    rng: np.random.Generator,
    eps_steps: int = 200,
    bridge_correction: bool = True,
    tail_closure: bool = True,
    chunk: int = 20000,
) -> CheckResult:
    """P(min_[a,T] Y <= sqrt(lam) max_[0,eps] Y) against the closed-form bound + 3 sigma.

    The report also carries the threshold-split bound assembled from the
    exact tail-min law and the running-max bound, and whether it holds.
    """
    if T <= params.a:
        raise PreconditionError(f"horizon T={T} must exceed a={params.a}")
    hits = 0.0
    root_lam = math.sqrt(params.lam)
    for batch in _chunks(trials, chunk):
        stream = Bessel3Stream(rng, batch)
        head = running_max_samples(stream, params.eps, params.eps / eps_steps, bridge_correction)
        stream.jump_to(params.a)
        p = tail_hit_probability(stream, root_lam * head, T, dt, bridge_correction, tail_closure)
        hits += float(p.sum())
    empirical = hits / trials

    bound = corollary_bound(params)
    margin = 3.0 * math.sqrt(bound * (1.0 - bound) / trials)
    subset = corollary_subset_bound(params)
    return _result(
        "corollary_bound", empirical, bound, margin, empirical <= bound + margin,
        subset_bound=subset, subset_bound_holds=bool(empirical <= subset + margin),
        eps=params.eps, a=params.a, lam=params.lam, dt=dt, T=T, trials=trials,
    )


# ============================================================================
# VERVAAT / WILLIAMS
# ============================================================================

def _excursions(bridges: int, L: int, rng: np.random.Generator, chunk: int) -> Iterator[np.ndarray]:
    for batch in _chunks(bridges, chunk):
        xs, _ = init(L, rng, paths=batch)
        yield vervaat_transform(xs)


def vervaat_nonnegative_check(bridges: int, L: int, rng: np.random.Generator, chunk: int = 2000) -> CheckResult:
    """Every transformed bridge is >= 0 with both ends exactly 0."""
    lowest, ends_ok = math.inf, True
    for e in _excursions(bridges, L, rng, chunk):
        lowest = min(lowest, float(e.min()))
        ends_ok &= bool(np.all(e[:, 0] == 0.0) and np.all(e[:, -1] == 0.0))
    return _result(
        "vervaat_nonnegative", lowest, 0.0, 0.0, lowest >= 0.0 and ends_ok,
        endpoints_zero=ends_ok, bridges=bridges, L=L,
    )


def vervaat_chi3_check(
    bridges: int, L: int, rng: np.random.Generator, alpha: float = 0.01, chunk: int = 2000
) -> CheckResult:
    """2 e(1/2) of the excursion follows the chi(3) law."""
    mid = np.concatenate([2.0 * e[:, 1 << (L - 1)] for e in _excursions(bridges, L, rng, chunk)])
    test = stats.kstest(mid, stats.chi(3).cdf)
    return _result(
        "vervaat_chi3_midpoint", test.pvalue, alpha, None, test.pvalue > alpha,
        statistic=float(test.statistic), bridges=bridges, L=L,
    )


# ============================================================================
# PITMAN DUALITY
# ============================================================================

def _pitman_samples(
    trials: int, dt: float, t0: float, horizon: float, rng: np.random.Generator, chunk: int
) -> tuple[np.ndarray, np.ndarray]:
    """(max of BM over [0, t0], min of Y over [t0, t0 + horizon t0] with tail closure)."""
    highs, lows = [], []
    for batch in _chunks(trials, chunk):
        highs.append(brownian_max_samples(rng, batch, t0, dt))
        stream = Bessel3Stream(rng, batch, start_time=t0)
        lows.append(tail_min_samples(stream, t0 * (1.0 + horizon), dt))
    return np.concatenate(highs), np.concatenate(lows)


def pitman_duality_check(
    trials: int,
    dt: float,
    t0: float,
    rng: np.random.Generator,
    horizon: float = 3.0,
    alpha: float = 0.01,
    chunk: int = 20000,
) -> CheckResult:
    """Past maximum of BM and future minimum of Y at t0 both follow |N(0, t0)|."""
    if trials < 1:
        raise PreconditionError(f"need at least one trial, got {trials}")
    if t0 <= 0:
        raise PreconditionError(f"t0 must be positive, got {t0}")
    highs, lows = _pitman_samples(trials, dt, t0, horizon, rng, chunk)
    half_normal = stats.halfnorm(scale=math.sqrt(t0)).cdf
    pair = stats.ks_2samp(highs, lows)
    p_high = stats.kstest(highs, half_normal).pvalue
    p_low = stats.kstest(lows, half_normal).pvalue
    return _result(
        f"pitman_duality_t{t0:g}", pair.pvalue, alpha, None,
        min(pair.pvalue, p_high, p_low) > alpha,
        bm_max_pvalue=float(p_high), bessel_min_pvalue=float(p_low),
        bm_max_median=float(np.median(highs)), bessel_min_median=float(np.median(lows)),
        half_normal_median=float(stats.halfnorm(scale=math.sqrt(t0)).median()),
        trials=trials, dt=dt,
    )


def pitman_scaling_check(
    trials: int,
    dt: float,
    rng: np.random.Generator,
    horizon: float = 3.0,
    tolerance: float = 0.1,
    chunk: int = 20000,
) -> CheckResult:
    """Future-minimum quantiles at t0 = 4 are twice those at t0 = 1."""
    _, low1 = _pitman_samples(trials, dt, 1.0, horizon, rng, chunk)
    _, low4 = _pitman_samples(trials, dt, 4.0, horizon, rng, chunk)
    levels = np.array([0.25, 0.5, 0.75])
    ratios = np.quantile(low4, levels) / np.quantile(low1, levels)
    worst = float(np.max(np.abs(ratios - 2.0)))
    return _result(
        "pitman_scaling", float(ratios[1]), 2.0, tolerance, worst <= tolerance,
        q25_ratio=float(ratios[0]), q75_ratio=float(ratios[2]), trials=trials,
    )


def lemma_pitman_consistency_check(
    z: float,
    trials: int,
    dt: float,
    T: float,
    rng: np.random.Generator,
    tolerance: float = 0.015,
    chunk: int = 20000,
) -> CheckResult:
    """The tail-min estimate at z agrees with the BM running-max CDF at z."""
    lemma = lemma_tail_min_check(z, trials, dt, T, rng, tolerance, chunk=chunk)
    highs = np.concatenate([brownian_max_samples(rng, batch, 1.0, dt) for batch in _chunks(trials, chunk)])
    bm_cdf = float(np.mean(highs <= z))
    gap = abs(lemma.empirical - bm_cdf)
    return _result(
        f"lemma_pitman_consistency_z{z:g}", lemma.empirical, bm_cdf, tolerance, gap <= tolerance,
        half_normal_cdf=lemma_tail_min_probability(z), trials=trials,
    )
