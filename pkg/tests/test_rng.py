import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import ks_pass_rate
from euler_errors.rng import (InvalidParameter, create_stream, sample_inverse_gaussian,
                              sample_normal, sample_uniform)

KS1_1E5 = 1.358 / np.sqrt(1e5)


def test_same_seed_and_shard_repeat():
    a = create_stream(1, 0).uniform(100)
    b = create_stream(1, 0).uniform(100)
    assert np.array_equal(a, b)


def test_shard_and_seed_change_sequence():
    base = create_stream(1, 0).uniform(100)
    assert not np.array_equal(base, create_stream(1, 1).uniform(100))
    assert not np.array_equal(base, create_stream(2, 0).uniform(100))


def test_negative_shard_rejected():
    with pytest.raises(InvalidParameter):
        create_stream(1, -1)


@given(st.integers(min_value=0, max_value=2**70), st.integers(min_value=0, max_value=1000))
@settings(max_examples=25, deadline=None)
def test_uniform_strictly_inside_unit_interval(seed, shard):
    u = sample_uniform(create_stream(seed, shard), 1000)
    assert np.all(u > 0) and np.all(u < 1)


def test_uniform_ks_and_mean():
    s = create_stream(3, 0)
    u = sample_uniform(s, 10**5)
    assert stats.kstest(u, "uniform").statistic < KS1_1E5
    assert abs(sample_uniform(s, 10**6).mean() - 0.5) < 0.002


def test_normal_moments_and_ks():
    s = create_stream(4, 0)
    z = sample_normal(s, 0.0, 1.0, 10**6)
    assert abs(z.mean()) < 0.004
    assert abs(z.var() - 1.0) < 0.01


def test_normal_ks_pass_rate():
    def trial(i):
        z = sample_normal(create_stream(40, i), 0.0, 1.0, 10**5)
        return stats.kstest(z, "norm").statistic, KS1_1E5
    assert ks_pass_rate(trial) >= 0.85


def test_normal_degenerate_and_errors(stream):
    assert sample_normal(stream, 3.0, 0.0) == 3.0
    with pytest.raises(InvalidParameter):
        sample_normal(stream, 0.0, -1.0)


def test_inverse_gaussian_moments():
    s = create_stream(5, 0)
    x = sample_inverse_gaussian(s, 1.0, 1.0, 10**6)
    assert abs(x.mean() - 1.0) < 0.01
    y = sample_inverse_gaussian(s, 2.0, 4.0, 10**6)
    assert abs(y.var() - 2.0) / 2.0 < 0.05
    assert np.all(x > 0) and np.all(y > 0)


@pytest.mark.parametrize("mean,shape", [(1.0, 1.0), (2.0, 4.0), (50.0, 0.1), (1e-3, 10.0)])
def test_inverse_gaussian_ks_against_scipy(mean, shape):
    x = sample_inverse_gaussian(create_stream(6, 0), mean, shape, 10**5)
    # scipy parametrises IG(mean, shape) as invgauss(mean/shape, scale=shape)
    d = stats.kstest(x, stats.invgauss(mean / shape, scale=shape).cdf).statistic
    assert d < KS1_1E5


def test_levy_is_infinite_mean_limit():
    s = create_stream(7, 0)
    x = s.inverse_gaussian(np.inf, 2.0, 10**5)
    assert stats.kstest(x, stats.levy(scale=2.0).cdf).statistic < KS1_1E5
    y = s.levy(2.0, 10**5)
    assert stats.kstest(y, stats.levy(scale=2.0).cdf).statistic < KS1_1E5


@pytest.mark.parametrize("mean,shape", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0)])
def test_inverse_gaussian_rejects_nonpositive(stream, mean, shape):
    with pytest.raises(InvalidParameter):
        sample_inverse_gaussian(stream, mean, shape)
