import numpy as np
import pytest
from scipy import stats

from tctsim.rng import CounterRNG, mix64, stream_key, uniform


def test_splitmix_reference_value():
    # first output of the reference SplitMix64 generator seeded with 0
    with np.errstate(over="ignore"):
        assert int(mix64(np.uint64(0x9E3779B97F4A7C15))[0]) == 0xE220A8397B1DCDAF


def test_range_and_uniformity():
    u = uniform(stream_key(11, np.arange(100)), np.arange(1000)[:, None]).ravel()
    assert u.min() >= 0.0 and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_pure_function_of_coordinates():
    keys = stream_key(7, np.arange(5))
    a = uniform(keys, 3)
    b = np.array([CounterRNG(7, s).at(3) for s in range(5)])
    assert np.array_equal(a, b)
    rng = CounterRNG(7, 2)
    seq = [rng.random() for _ in range(4)]
    assert seq == [CounterRNG(7, 2).at(k) for k in range(4)]
    assert rng.counter == 4


def test_streams_and_seeds_differ():
    assert CounterRNG(1, 0).at(0) != CounterRNG(1, 1).at(0)
    assert CounterRNG(1, 0).at(0) != CounterRNG(2, 0).at(0)
    u = uniform(stream_key(3, np.arange(2)), np.arange(5000)[:, None])
    assert abs(np.corrcoef(u[:, 0], u[:, 1])[0, 1]) < 0.05


def test_seed_bounds():
    stream_key(2**64 - 1, 0)
    with pytest.raises(ValueError):
        stream_key(-1, 0)
    with pytest.raises(ValueError):
        stream_key(2**64, 0)
