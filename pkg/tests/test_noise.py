"""Keyed and scripted randomness sources."""
import sys
from pathlib import Path

# Add src to path
PROJECT_SRC = Path(__file__).resolve().parents[1] / "src"
sys.path.insert(0, str(PROJECT_SRC))

import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

from dyadic.noise import (  # noqa: E402
    ConstantUniforms,
    CountingNormals,
    KeyedGaussians,
    KeyedSource,
    KeyedUniforms,
    NormalSource,
    ScriptedNormals,
    TableGaussians,
    derive_seed,
    splitmix64,
)


def test_splitmix64_reference_value():
    # first output of the reference SplitMix64 generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_derive_seed_is_stable_and_order_sensitive():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    assert derive_seed(1, 2, 3) != derive_seed(3, 2, 1)
    assert len({derive_seed(0, d, 4, t) for d in range(8, 15) for t in range(200)}) == 7 * 200


def test_keyed_gaussians_do_not_depend_on_request_order():
    source = KeyedGaussians(11)
    index = np.arange(1, 200, 2, dtype=np.int64)
    forward = source.at(8, index)
    backward = source.at(8, index[::-1])[::-1]
    assert np.array_equal(forward, backward)
    assert np.array_equal(source.at(8, index[5:6]), forward[5:6])


def test_keyed_streams_differ_by_seed_level_and_kind():
    index = np.arange(1, 64, 2, dtype=np.int64)
    assert not np.array_equal(KeyedGaussians(1).at(6, index), KeyedGaussians(2).at(6, index))
    assert not np.array_equal(KeyedGaussians(1).at(6, index), KeyedGaussians(1).at(7, index))
    u = KeyedUniforms(1).at(6, index)
    assert np.all((u > 0.0) & (u < 1.0))


def test_keyed_gaussians_are_standard_normal():
    g = KeyedGaussians(5).at(20, np.arange(1, 40001, 2, dtype=np.int64))
    assert stats.kstest(g, "norm").pvalue > 0.001


def test_keyed_uniforms_are_uniform():
    u = KeyedUniforms(5).at(3, np.arange(20000, dtype=np.int64))
    assert stats.kstest(u, "uniform").pvalue > 0.001


def test_scripted_normals_then_fill():
    source = ScriptedNormals([1.0, -2.0], fill=0.5)
    assert source.standard_normal(3).tolist() == [1.0, -2.0, 0.5]
    assert source.standard_normal((2, 1)).shape == (2, 1)
    assert source.consumed == 5


def test_counting_wrapper_counts_draws():
    counter = CountingNormals(np.random.default_rng(0))
    counter.standard_normal((4, 3))
    counter.standard_normal(5)
    assert counter.consumed == 17


def test_injection_doubles():
    table = TableGaussians({(1, 1): 2.0}, default=-1.0)
    assert table.at(1, np.array([1])).tolist() == [2.0]
    assert table.at(2, np.array([1, 3])).tolist() == [-1.0, -1.0]
    assert ConstantUniforms(0.25).at(0, np.arange(3)).tolist() == [0.25] * 3


def test_protocols_are_satisfied():
    assert isinstance(np.random.default_rng(0), NormalSource)
    assert isinstance(ScriptedNormals(), NormalSource)
    assert isinstance(KeyedGaussians(0), KeyedSource)
    assert isinstance(TableGaussians(), KeyedSource)
