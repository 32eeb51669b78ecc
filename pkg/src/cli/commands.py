"""
Command-line surface: run, experiment, validate, figures.

Exit codes: 0 success (green run, all checks and assertions pass),
1 usage or configuration error, 2 red-X abort of a run,
3 failed validation check or experiment assertion.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
from loguru import logger
from pydantic import ValidationError

from bridge.fill_in import NoiseConvention
from dyadic.bridge_store import LazyBridgePath
from dyadic.noise import KeyedUniforms
from experiments.harness import ExperimentConfig, evaluate_assertions, run_experiment
from experiments.stats_io import emit_stats, load_config_file, write_stats_file
from search.certificate2 import Verdict
from search.figures import emit_figure_data, write_figure_file
from search.online_argmin import RunResult, run_basic
from shared.errors import ArgminError
from validation.suites import Suite, ValidationSettings, report_json, run_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RED_X = 2
EXIT_FAILED_CHECK = 3

# (d, N, certificate 2, recentred output) for the two figure presets
FIGURES = {1: (14, 4, False, False), 2: (7, 4, True, True)}


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; here 2 means a red-X, so usage errors exit 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


# ============================================================================
# RUN / FIGURES
# ============================================================================

def _search(d: int, N: int, seed: int, convention: NoiseConvention, cert2: bool, coupled: bool) -> RunResult:
    uniforms = KeyedUniforms(seed) if cert2 else None
    if coupled:
        return run_basic(
            d, N, LazyBridgePath.from_seed(seed, convention), convention,
            coupled=True, certificate2=uniforms,
        )
    return run_basic(
        d, N, convention=convention, normals=np.random.default_rng(seed), certificate2=uniforms
    )


def format_transcript(result: RunResult, seed: int) -> str:
    mode = "coupled" if result.coupled else "standalone"
    lines = [f"d={result.d} N={result.N} seed={seed} convention={result.convention.value} mode={mode}"]
    lines += [f"t*_{n} = {t!r}" for n, t in enumerate(result.t_stars)]
    lines.append(f"U_{len(result.t_stars) - 1} = {result.U!r}")

    if result.cert1 is Verdict.RED_X:
        lines.append(f"certificate 1: red-x at level {result.abort_level}")
    else:
        lines.append("certificate 1: green")
    if result.cert2 is None:
        lines.append("certificate 2: not run")
    elif result.cert2 is Verdict.RED_X:
        lines.append(f"certificate 2: red-x at level {result.cert2_abort_level}")
    else:
        lines.append("certificate 2: green")

    lines.append(f"normals consumed: {result.gaussians_consumed}")
    return "\n".join(lines) + "\n"


def cmd_run(args: argparse.Namespace) -> int:
    convention = NoiseConvention(args.convention)
    result = _search(args.d, args.N, args.seed, convention, args.cert2, args.coupled)
    sys.stdout.write(format_transcript(result, args.seed))
    if args.out is not None:
        write_figure_file(result, args.out)
    return EXIT_OK if result.green else EXIT_RED_X


def cmd_figures(args: argparse.Namespace) -> int:
    d, N, cert2, recentred = FIGURES[args.figure]
    result = _search(d, N, args.seed, NoiseConvention(args.convention), cert2, coupled=False)
    if args.out is None:
        emit_figure_data(result, sys.stdout, recentred=recentred)
    else:
        write_figure_file(result, args.out, recentred=recentred)
    if not result.green:
        logger.warning("[FUNCTION cmd_figures] run aborted with a red-X; try another --seed")
    return EXIT_OK if result.green else EXIT_RED_X


# ============================================================================
# EXPERIMENT
# ============================================================================

def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config_file(args.config) if args.config is not None else {}
    overrides = {
        "d_list": args.d,
        "N_list": args.N,
        "trials": args.trials,
        "master_seed": args.seed,
        "workers": args.workers,
        "oracle_extra_levels": args.extra_levels,
        "convention": args.convention,
        "certificate2_enabled": args.cert2,
        "timings": args.timings,
        "assert_trend": args.assert_trend,
        "max_failure_rate": args.max_failure_rate,
    }
    values.update({key: value for key, value in overrides.items() if value is not None})
    for required, flag in (("d_list", "--d"), ("N_list", "--N"), ("trials", "--trials")):
        if required not in values:
            args.parser.error(f"{flag} is required unless set in --config")
    return ExperimentConfig.model_validate(values)


def cmd_experiment(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    rows = run_experiment(config)
    if args.out is None:
        emit_stats(rows, args.format or "csv", sys.stdout)
    else:
        write_stats_file(rows, args.out, args.format)

    failures = evaluate_assertions(rows, config)
    for message in failures:
        sys.stderr.write(f"assertion failed: {message}\n")
    return EXIT_FAILED_CHECK if failures else EXIT_OK


# ============================================================================
# VALIDATE
# ============================================================================

def cmd_validate(args: argparse.Namespace) -> int:
    settings = ValidationSettings.quick() if args.quick else ValidationSettings()
    report = run_suite(Suite(args.suite), args.seed, settings)
    text = report_json(report)
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8", newline="\n")
        logger.info("[FUNCTION cmd_validate] report written to {}", args.out)
    return EXIT_OK if report.passed else EXIT_FAILED_CHECK


# ============================================================================
# PARSER
# ============================================================================

def _add_convention(parser: argparse.ArgumentParser, default: str | None) -> None:
    parser.add_argument(
        "--convention",
        choices=[c.value for c in NoiseConvention],
        default=default,
        help="midpoint noise convention",
    )


def build_parser() -> argparse.ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = _ArgumentParser(
        prog="argmin",
        description="Online bisection search for the arg-min of a Brownian bridge.",
        formatter_class=formatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="one search with a transcript", formatter_class=formatter)
    run.add_argument("--d", type=int, default=14, help="grid depth (2^d intervals per level)")
    run.add_argument("--N", type=int, default=4, help="number of zoom levels")
    run.add_argument("--seed", type=int, default=0, help="random seed")
    _add_convention(run, NoiseConvention.VARIANCE_CONSISTENT.value)
    run.add_argument("--cert2", action="store_true", help="run the second certificate at every level")
    run.add_argument("--coupled", action="store_true", help="draw values from the keyed bridge store")
    run.add_argument("--out", type=Path, default=None, help="figure data CSV path")
    run.set_defaults(handler=cmd_run, parser=run)

    experiment = commands.add_parser(
        "experiment", help="Monte Carlo sweep against the full-grid oracle", formatter_class=formatter
    )
    experiment.add_argument("--config", type=Path, default=None, help="TOML or JSON file of ExperimentConfig keys")
    experiment.add_argument("--d", type=_int_list, default=None, help="comma-separated grid depths")
    experiment.add_argument("--N", type=_int_list, default=None, help="comma-separated zoom level counts")
    experiment.add_argument("--trials", type=int, default=None, help="trials per (d, N) cell")
    experiment.add_argument("--seed", type=int, default=None, help="master seed")
    experiment.add_argument("--workers", type=int, default=None, help="worker processes (default ARGMIN_WORKERS)")
    experiment.add_argument("--out", type=Path, default=None, help="stats file path (stdout when omitted)")
    experiment.add_argument("--format", choices=["csv", "json"], default=None, help="stats format (from --out suffix when omitted)")
    experiment.add_argument("--extra-levels", type=int, default=None, help="oracle levels beyond d+N")
    _add_convention(experiment, None)
    experiment.add_argument("--cert2", action="store_true", default=None, help="enable the second certificate")
    experiment.add_argument("--timings", action="store_true", default=None, help="record wall_time_s")
    experiment.add_argument("--assert-trend", action="store_true", default=None, help="fail (exit 3) unless failure rates fall with d")
    experiment.add_argument("--max-failure-rate", type=float, default=None, help="fail (exit 3) above this rate at the largest d")
    experiment.set_defaults(handler=cmd_experiment, parser=experiment)

    validate = commands.add_parser("validate", help="statistical validation suites", formatter_class=formatter)
    validate.add_argument("--suite", choices=[s.value for s in Suite], default=Suite.ALL.value, help="suite to run")
    validate.add_argument("--seed", type=int, default=0, help="suite seed")
    validate.add_argument("--out", type=Path, default=None, help="JSON report path (stdout when omitted)")
    validate.add_argument("--quick", action="store_true", help="small sample sizes for a smoke run")
    validate.set_defaults(handler=cmd_validate, parser=validate)

    figures = commands.add_parser("figures", help="plot data for the two figures", formatter_class=formatter)
    figures.add_argument("--figure", type=int, choices=sorted(FIGURES), default=1, help="figure number")
    figures.add_argument("--seed", type=int, default=0, help="random seed")
    _add_convention(figures, NoiseConvention.VARIANCE_CONSISTENT.value)
    figures.add_argument("--out", type=Path, default=None, help="CSV path (stdout when omitted)")
    figures.set_defaults(handler=cmd_figures, parser=figures)

    return parser


@logger.catch(reraise=True)
def main(argv: list[str] | None = None) -> int:
    """Parse argv, dispatch, and map errors to exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE if exc.code else EXIT_OK
    except (ArgminError, ValidationError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
