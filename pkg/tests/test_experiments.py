"""Coupled trials, the oracle, aggregation and stats files."""
import io
import json
import random
import sys
from pathlib import Path

# Add src to path
PROJECT_SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(PROJECT_SRC))

import numpy as np  # noqa: E402
import pytest  # noqa: E402
from pydantic import ValidationError  # noqa: E402

from dyadic.bridge_store import LazyBridgePath  # noqa: E402
from dyadic.dyadic_time import circle_dist  # noqa: E402
from dyadic.noise import TableGaussians, derive_seed  # noqa: E402
from experiments.harness import (  # noqa: E402
    ExperimentConfig,
    ExperimentStats,
    TrialOutcome,
    aggregate,
    evaluate_assertions,
    run_experiment,
    run_trial,
    verify_coupling,
)
from experiments.stats_io import STATS_COLUMNS, emit_stats, load_config_file, read_stats  # noqa: E402
from shared.errors import CouplingError, PreconditionError  # noqa: E402


def _config(**overrides):
    values = dict(d_list=[5], N_list=[2], trials=4, master_seed=9, workers=1)
    values.update(overrides)
    return ExperimentConfig(**values)


def _outcome(d, N, trial, cert1_redx, cert2_redx, dist, wall_time_s):
    return TrialOutcome(
        d=d, N=N, trial=trial, cert1_redx=cert1_redx, cert2_redx=cert2_redx,
        dist=dist, wall_time_s=wall_time_s,
    )


# ============================================================================
# CONFIG
# ============================================================================

def test_config_validation():
    with pytest.raises(ValidationError):
        _config(d_list=[2])
    with pytest.raises(ValidationError):
        _config(trials=0)
    with pytest.raises(ValidationError):
        _config(d_list=[38], N_list=[4])
    with pytest.raises(ValidationError):
        _config(unknown_key=1)


# ============================================================================
# TRIALS
# ============================================================================

def test_trial_is_deterministic():
    config = _config(certificate2_enabled=True)
    a, u_a, dist_a = run_trial(7, 3, 1234, config)
    b, u_b, dist_b = run_trial(7, 3, 1234, config)
    assert a.model_dump() == b.model_dump()
    assert (u_a, dist_a) == (u_b, dist_b)


def test_zero_noise_path():
    result, u_oracle, dist = run_trial(5, 2, 0, _config(), path=LazyBridgePath(TableGaussians()))
    assert u_oracle == 0.0
    assert result.t_stars[0] == 0.0
    assert not result.green
    assert dist is None


def test_oracle_dominates_the_full_grid():
    config = _config(oracle_extra_levels=1)
    for seed in range(5):
        result, u_oracle, dist = run_trial(5, 2, seed, config)
        grid = LazyBridgePath.from_seed(seed).refine_full(5 + 2 + 1)
        k = int(round(u_oracle * grid.size))
        assert np.all(grid >= grid[k])
        assert np.all(grid[:k] > grid[k])
        if result.green:
            assert dist == circle_dist(u_oracle, result.U)


def test_coupling_violation_is_detected():
    path = LazyBridgePath.from_seed(3)
    result, _, _ = run_trial(6, 2, 3, _config(), path=path)
    verify_coupling(result, path)
    tampered = result.model_copy(update={"final_value": result.final_value + 1.0})
    with pytest.raises(CouplingError):
        verify_coupling(tampered, path)


def test_fig1_sized_trial_has_four_levels():
    from search.online_argmin import run_basic

    seed = next(s for s in range(50) if run_basic(14, 4, LazyBridgePath.from_seed(s), coupled=True).green)
    result = run_basic(14, 4, LazyBridgePath.from_seed(seed), coupled=True)
    assert len(result.level_arrays) == 4
    assert all(hat.shape == (2**13 + 1,) for hat in result.level_arrays)


# ============================================================================
# EXPERIMENTS
# ============================================================================

def test_single_trial_row_matches_the_trial():
    config = _config(trials=1)
    (row,) = run_experiment(config)
    result, _, dist = run_trial(5, 2, derive_seed(config.master_seed, 5, 2, 0), config)
    assert row.trials == 1
    assert row.cert1_redx_rate == float(result.abort_level is not None)
    assert row.mean_dist == dist
    assert row.max_dist == dist
    assert row.wall_time_s is None


def test_worker_count_does_not_change_stats():
    serial = run_experiment(_config(d_list=[5, 6], N_list=[2, 3], trials=6, workers=1))
    parallel = run_experiment(_config(d_list=[5, 6], N_list=[2, 3], trials=6, workers=2))
    assert [r.model_dump() for r in serial] == [r.model_dump() for r in parallel]
    assert [(r.d, r.N) for r in serial] == [(5, 2), (5, 3), (6, 2), (6, 3)]


def test_rates_are_probabilities():
    for row in run_experiment(_config(d_list=[4, 6], trials=10, certificate2_enabled=True)):
        for rate in (row.cert1_redx_rate, row.cert2_redx_rate, row.combined_failure_rate):
            assert 0.0 <= rate <= 1.0
        assert row.n_green <= row.trials


def test_aggregation_ignores_completion_order():
    outcomes = [
        _outcome(5, 2, t, t % 3 == 0, t % 5 == 0, None if t % 3 == 0 else 0.01 * t, 0.0)
        for t in range(30)
    ]
    shuffled = outcomes[:]
    random.Random(0).shuffle(shuffled)
    assert aggregate(outcomes) == aggregate(shuffled)


def test_aggregation_arithmetic():
    outcomes = [
        _outcome(8, 4, 0, False, False, 0.01, 0.5),
        _outcome(8, 4, 1, False, False, 0.10, 0.5),
        _outcome(8, 4, 2, True, False, None, 0.5),
        _outcome(8, 4, 3, False, True, None, 0.5),
    ]
    (row,) = aggregate(outcomes, timings=True)
    assert row.cert1_redx_rate == 0.25
    assert row.cert2_redx_rate == 0.25
    assert row.dist_exceed_rate == 0.5
    assert row.dist_exceed_rate_unconditional == 0.25
    assert row.combined_failure_rate == 0.75
    assert row.max_dist == 0.10
    assert row.wall_time_s == 2.0


def _row(d, rate, trials=1000):
    return ExperimentStats(
        d=d, N=4, trials=trials, cert1_redx_rate=rate, cert2_redx_rate=0.0,
        dist_exceed_rate=0.0, mean_dist=0.0, max_dist=0.0, combined_failure_rate=rate,
    )


def test_assertions():
    falling = [_row(8, 0.3), _row(10, 0.2), _row(12, 0.1)]
    rising = [_row(8, 0.1), _row(10, 0.3)]
    assert evaluate_assertions(falling, _config(assert_trend=True, max_failure_rate=0.15)) == []
    assert len(evaluate_assertions(rising, _config(assert_trend=True))) == 1
    assert len(evaluate_assertions(falling, _config(max_failure_rate=0.05))) == 1
    assert evaluate_assertions(rising, _config()) == []


# ============================================================================
# STATS FILES
# ============================================================================

def test_empty_stats_csv_is_header_only():
    sink = io.StringIO()
    assert emit_stats([], "csv", sink) == 0
    assert sink.getvalue() == ",".join(STATS_COLUMNS) + "\n"


def test_stats_csv_and_json_round_trip():
    row = ExperimentStats(
        d=10, N=4, trials=3, cert1_redx_rate=1 / 3, cert2_redx_rate=0.0,
        dist_exceed_rate=None, mean_dist=0.1 + 0.2, max_dist=2.0**-40, wall_time_s=None,
    )
    sink = io.StringIO()
    assert emit_stats([row], "csv", sink) == 1
    (parsed,) = read_stats(io.StringIO(sink.getvalue()), "csv")
    assert parsed.cert1_redx_rate == 1 / 3
    assert parsed.mean_dist == 0.1 + 0.2
    assert parsed.dist_exceed_rate is None

    sink = io.StringIO()
    emit_stats([row], "json", sink)
    assert read_stats(io.StringIO(sink.getvalue()), "json") == [row]
    assert set(json.loads(sink.getvalue())[0]) >= set(STATS_COLUMNS)


def test_unknown_format():
    with pytest.raises(PreconditionError):
        emit_stats([], "xml", io.StringIO())


def test_config_files(tmp_path):
    toml_path = tmp_path / "exp.toml"
    toml_path.write_text('d_list = [8, 10]\nN_list = [4]\ntrials = 5\nmaster_seed = 2\n', encoding="utf-8")
    json_path = tmp_path / "exp.json"
    json_path.write_text(json.dumps({"d_list": [8], "N_list": [4], "trials": 5}), encoding="utf-8")

    assert ExperimentConfig(**load_config_file(toml_path)).d_list == [8, 10]
    assert ExperimentConfig(**load_config_file(json_path)).trials == 5
    with pytest.raises(PreconditionError):
        load_config_file(tmp_path / "exp.yaml")


def test_sample_configs_are_valid():
    sample = Path(__file__).resolve().parents[1] / "data" / "sample"
    assert ExperimentConfig(**load_config_file(sample / "experiment.toml")).assert_trend

    acceptance = ExperimentConfig(**load_config_file(sample / "acceptance_trend.toml"))
    assert acceptance.d_list == [8, 10, 12, 14]
    assert acceptance.N_list == [4]
    assert acceptance.trials == 2000
    assert acceptance.certificate2_enabled
    assert acceptance.assert_trend
    assert acceptance.max_failure_rate == 0.05
