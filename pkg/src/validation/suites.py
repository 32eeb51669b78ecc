"""
Named validation suites and the JSON report.

Each check draws from its own Generator seeded by (suite seed, crc32 of the
check name), so a check's outcome does not depend on which suite ran it or
on what ran before it.
"""

from __future__ import annotations

import json
import zlib
from collections.abc import Callable
from enum import Enum
from typing import Annotated, TextIO

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from bridge.fill_in import NoiseConvention
from dyadic.noise import derive_seed
from validation import checks
from validation.checks import CheckResult, CorollaryParams

CheckRunner = Callable[[np.random.Generator], CheckResult]


class Suite(str, Enum):
    BRIDGE = "bridge"
    BESSEL = "bessel"
    VERVAAT = "vervaat"
    PITMAN = "pitman"
    CERTIFICATE2 = "certificate2"
    ALL = "all"


class ValidationSettings(BaseModel):
    """Sample sizes and numerical settings; defaults are the full-size runs."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    bridge_paths: Annotated[int, Field(ge=2)] = 20000
    bridge_depth: Annotated[int, Field(ge=2)] = 10
    store_paths: Annotated[int, Field(ge=2)] = 20000
    store_seeds: Annotated[int, Field(ge=1)] = 20
    roundtrip_samples: Annotated[int, Field(ge=1)] = 100000
    ks_samples: Annotated[int, Field(ge=1)] = 100000
    shift_grids: Annotated[int, Field(ge=1)] = 500
    shift_depth: Annotated[int, Field(ge=2)] = 7
    bessel_paths: Annotated[int, Field(ge=1)] = 100000
    tail_trials: Annotated[int, Field(ge=1)] = 100000
    tail_dt: Annotated[float, Field(gt=0)] = 1e-3
    tail_horizon: Annotated[float, Field(gt=1, description="T for the tail-min checks")] = 4.0
    tail_tolerance: Annotated[float, Field(gt=0)] = 0.015
    bridge_correction: bool = True
    tail_closure: bool = True
    lemma_z: list[Annotated[float, Field(gt=0)]] = [0.25, 0.5, 1.0]
    max_z: list[Annotated[float, Field(gt=0)]] = [4.0, 6.0]
    max_dt: Annotated[float, Field(gt=0)] = 1e-3
    corollary: CorollaryParams = CorollaryParams(eps=0.01, a=1.0, lam=1.0)
    vervaat_bridges: Annotated[int, Field(ge=1)] = 10000
    vervaat_level: Annotated[int, Field(ge=2)] = 12
    pitman_trials: Annotated[int, Field(ge=1)] = 100000
    pitman_dt: Annotated[float, Field(gt=0)] = 1e-3
    ks_alpha: Annotated[float, Field(gt=0, lt=1)] = 0.01
    chunk: Annotated[int, Field(ge=1, description="Paths simulated per batch")] = 20000

    @classmethod
    def quick(cls) -> ValidationSettings:
        """Small sizes for smoke runs; tolerances are unchanged, so expect noise."""
        return cls(
            bridge_paths=4000,
            bridge_depth=6,
            store_paths=4000,
            store_seeds=3,
            roundtrip_samples=10000,
            ks_samples=5000,
            shift_grids=50,
            bessel_paths=5000,
            tail_trials=4000,
            tail_dt=1e-2,
            tail_horizon=3.0,
            tail_tolerance=0.05,
            max_dt=1e-2,
            vervaat_bridges=1000,
            vervaat_level=8,
            pitman_trials=4000,
            pitman_dt=1e-2,
            chunk=5000,
        )


class ValidationReport(BaseModel):
    suite: Suite
    seed: int
    passed: bool
    checks: list[CheckResult]


# ============================================================================
# SUITE PLANS
# ============================================================================

def _bridge_plan(s: ValidationSettings) -> list[tuple[str, CheckRunner]]:
    return [
        ("bridge_covariance", lambda rng: checks.bridge_covariance_check(
            s.bridge_paths, s.bridge_depth, rng, chunk=s.chunk)),
        ("bridge_marginal_variance", lambda rng: checks.bridge_marginal_check(
            s.bridge_paths, s.bridge_depth, rng, chunk=s.chunk)),
        ("paper_literal_variance", lambda rng: checks.paper_literal_variance_check(
            s.bridge_paths, s.bridge_depth, rng, chunk=s.chunk)),
        ("bridge_covariance_paper_literal_rejected", lambda rng: _expect_failure(
            checks.bridge_covariance_check(
                s.bridge_paths, s.bridge_depth, rng, NoiseConvention.PAPER_LITERAL, s.chunk),
            "bridge_covariance_paper_literal_rejected")),
        ("store_covariance", lambda rng: checks.store_covariance_check(s.store_paths, rng)),
        ("store_matches_init", lambda rng: checks.store_matches_init_check(
            s.bridge_depth, s.store_seeds, rng)),
    ]


def _certificate2_plan(s: ValidationSettings) -> list[tuple[str, CheckRunner]]:
    return [
        ("reflection_roundtrip", lambda rng: checks.reflection_roundtrip_check(s.roundtrip_samples, rng)),
        ("interval_min_ks", lambda rng: checks.interval_min_ks_check(s.ks_samples, rng, s.ks_alpha)),
        ("interval_min_monotone", lambda rng: checks.interval_min_monotone_check(s.ks_samples, rng)),
        ("certificate2_shift_invariance", lambda rng: checks.certificate2_shift_check(
            s.shift_grids, s.shift_depth, rng)),
    ]


def _bessel_plan(s: ValidationSettings) -> list[tuple[str, CheckRunner]]:
    plan: list[tuple[str, CheckRunner]] = [
        ("bessel_mean", lambda rng: checks.bessel_mean_check(s.bessel_paths, rng)),
        ("bessel_scaling", lambda rng: checks.bessel_scaling_check(s.bessel_paths, rng, alpha=s.ks_alpha)),
    ]
    for z in s.lemma_z:
        plan.append((f"lemma_tail_min_z{z:g}", lambda rng, z=z: checks.lemma_tail_min_check(
            z, s.tail_trials, s.tail_dt, s.tail_horizon, rng, s.tail_tolerance,
            s.bridge_correction, s.tail_closure, s.chunk)))
    for z in s.max_z:
        plan.append((f"max_bound_z{z:g}", lambda rng, z=z: checks.max_bound_check(
            z, s.tail_trials, s.max_dt, rng, s.bridge_correction, s.chunk)))
    plan.append(("corollary_bound", lambda rng: checks.corollary_bound_check(
        s.corollary, s.tail_trials, s.tail_dt, s.corollary.a + s.tail_horizon - 1.0, rng,
        bridge_correction=s.bridge_correction, tail_closure=s.tail_closure, chunk=s.chunk)))
    return plan


def _vervaat_plan(s: ValidationSettings) -> list[tuple[str, CheckRunner]]:
    return [
        ("vervaat_nonnegative", lambda rng: checks.vervaat_nonnegative_check(
            s.vervaat_bridges, s.vervaat_level, rng)),
        ("vervaat_chi3_midpoint", lambda rng: checks.vervaat_chi3_check(
            s.vervaat_bridges, s.vervaat_level, rng, s.ks_alpha)),
    ]


def _pitman_plan(s: ValidationSettings) -> list[tuple[str, CheckRunner]]:
    z = 0.5
    return [
        ("pitman_duality_t1", lambda rng: checks.pitman_duality_check(
            s.pitman_trials, s.pitman_dt, 1.0, rng, s.tail_horizon - 1.0, s.ks_alpha, s.chunk)),
        ("pitman_scaling", lambda rng: checks.pitman_scaling_check(
            s.pitman_trials, s.pitman_dt, rng, s.tail_horizon - 1.0, chunk=s.chunk)),
        (f"lemma_pitman_consistency_z{z:g}", lambda rng: checks.lemma_pitman_consistency_check(
            z, s.tail_trials, s.tail_dt, s.tail_horizon, rng, s.tail_tolerance, s.chunk)),
    ]


_PLANS: dict[Suite, Callable[[ValidationSettings], list[tuple[str, CheckRunner]]]] = {
    Suite.BRIDGE: _bridge_plan,
    Suite.BESSEL: _bessel_plan,
    Suite.VERVAAT: _vervaat_plan,
    Suite.PITMAN: _pitman_plan,
    Suite.CERTIFICATE2: _certificate2_plan,
}


def _expect_failure(result: CheckResult, name: str) -> CheckResult:
    """Invert a check: the paper-literal coefficient must fail the bridge law."""
    return result.model_copy(update={"name": name, "passed": not result.passed})


def plan_suite(suite: Suite, settings: ValidationSettings) -> list[tuple[str, CheckRunner]]:
    """Ordered (name, runner) pairs; `all` lists every check exactly once."""
    suites = [s for s in Suite if s is not Suite.ALL] if suite is Suite.ALL else [suite]
    seen: set[str] = set()
    plan = []
    for member in suites:
        for name, runner in _PLANS[member](settings):
            if name not in seen:
                seen.add(name)
                plan.append((name, runner))
    return plan


def check_seed(seed: int, name: str) -> int:
    return derive_seed(seed, zlib.crc32(name.encode("utf-8")))


def run_suite(suite: Suite | str, seed: int, settings: ValidationSettings | None = None) -> ValidationReport:
    """Run every check of a suite and collect the report."""
    suite = Suite(suite)
    settings = settings or ValidationSettings()
    results = []
    for name, runner in plan_suite(suite, settings):
        logger.info("[FUNCTION run_suite] running {}", name)
        results.append(runner(np.random.default_rng(check_seed(seed, name))))

    report = ValidationReport(
        suite=suite, seed=seed, passed=all(r.passed for r in results), checks=results
    )
    logger.info(
        "[FUNCTION run_suite] suite={} | checks={} | failed={}",
        suite.value, len(results), sum(not r.passed for r in results),
    )
    return report


def report_json(report: ValidationReport) -> str:
    return json.dumps(report.model_dump(mode="json", by_alias=True), indent=2) + "\n"


def write_report(report: ValidationReport, sink: TextIO) -> int:
    """Write the JSON report; returns the number of checks."""
    sink.write(report_json(report))
    return len(report.checks)
