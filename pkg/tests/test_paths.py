import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import ks_crit2, ks_pass_rate, refined_bridge_extremes
from euler_errors.paths import (BarrierSpec, PathGrid, bessel3_step, bridge_argmin_time_sample,
                                bridge_cross_prob, bridge_hit_time_sample, bridge_min_from_uniform,
                                bridge_min_sample, busy_period, refine_bridge, reflect,
                                sample_bessel3_at, sample_bm_grid, sample_two_sided_bessel3)
from euler_errors.rng import InvalidParameter, create_stream


def _grid(values, n=1):
    v = np.asarray(values, float)
    return PathGrid(np.arange(v.size) / n, v)


# -- PathGrid and BarrierSpec ------------------------------------------------

def test_pathgrid_validation():
    with pytest.raises(InvalidParameter):
        PathGrid(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(InvalidParameter):
        PathGrid(np.array([0.0, 1.0, 1.0]), np.zeros(3))
    with pytest.raises(InvalidParameter):
        PathGrid(np.array([0.0, 1.0]), np.zeros(3))


def test_pathgrid_csv_round_trip(tmp_path, stream):
    p = sample_bm_grid(0.3, 1.2, 16, 1.0, stream)
    p.to_csv(tmp_path / "p.csv")
    q = PathGrid.from_csv(tmp_path / "p.csv", 0.3, 1.2)
    assert np.array_equal(p.times, q.times) and np.array_equal(p.values, q.values)


def test_barrier_requires_positive_start():
    with pytest.raises(InvalidParameter):
        BarrierSpec.const(0.0)
    with pytest.raises(InvalidParameter):
        BarrierSpec.linear(1.0, -0.5)
    b = BarrierSpec(lambda t: 1.0 - np.asarray(t), lambda t: -np.ones(np.shape(t)))
    with pytest.raises(InvalidParameter):
        b.check(np.linspace(0, 1, 5))


def test_barrier_values():
    b = BarrierSpec.linear(0.5, 2.0)
    assert np.allclose(b(np.array([0.0, 1.0])), [0.5, 2.5])
    assert BarrierSpec.const(1.5)(3.0) == 1.5
    assert BarrierSpec.const(1.5).constant


# -- Brownian grids ----------------------------------------------------------------

def test_bm_grid_degenerate_drift(stream):
    p = sample_bm_grid(1.0, 0.0, 8, 1.0, stream, degenerate=True)
    assert np.array_equal(p.values, np.arange(9) / 8)
    with pytest.raises(InvalidParameter):
        sample_bm_grid(1.0, 0.0, 8, 1.0, stream)
    with pytest.raises(InvalidParameter):
        sample_bm_grid(1.0, -1.0, 8, 1.0, stream)


def test_bm_grid_terminal_mean():
    s = create_stream(21)
    N, mu, sigma = 10**5, 0.7, 1.3
    ends = np.array([sample_bm_grid(mu, sigma, 4, 1.0, s).values[-1] for _ in range(N)])
    assert ends[0] != 0.0
    assert abs(ends.mean() - mu) < 3 * sigma / np.sqrt(N)


def test_brownian_scaling_ks():
    s = create_stream(22)
    c, N = 4.0, 10**5
    big = sample_bm_grid(0.0, 1.0, 1, N * c, s).values  # increments over length c
    a = np.diff(big[:: int(c)])[:N] / np.sqrt(c)
    b = np.diff(sample_bm_grid(0.0, 1.0, 1, N, s).values)
    assert stats.ks_2samp(a, b).statistic < 0.0122


def test_refine_bridge_preserves_and_midpoint_variance():
    s = create_stream(23)
    p = sample_bm_grid(0.0, 1.0, 4, 1.0, s)
    q = refine_bridge(p, 3, s)
    assert np.array_equal(q.values[::8], p.values)
    assert np.array_equal(q.times[::8], p.times)
    flat = refine_bridge(PathGrid(np.array([0.0, 1.0]), np.zeros(2), 0.0, 0.0), 1, s)
    assert flat.values[1] == 0.0
    # midpoint deviation of a refined bridge over an interval of length 2
    N = 10**5
    base = PathGrid(np.array([0.0, 2.0]), np.array([0.0, 0.5]), 0.0, 1.5)
    dev = np.array([refine_bridge(base, 1, s).values[1] - 0.25 for _ in range(N)])
    assert abs(dev.var() / (1.5**2 * 2.0 / 4) - 1.0) < 0.02


# -- exact bridge functionals ---------------------------------------------------------

def test_cross_prob_formula():
    assert bridge_cross_prob(1.0, 0.0, 1.0, 1.0, 1.0) == 1.0
    c, sigma, delta = 0.7, 1.3, 0.5
    assert np.isclose(bridge_cross_prob(-c, -c, delta, 0.0, sigma), np.exp(-2 * c * c / (sigma**2 * delta)))


def test_bridge_min_formula_edges():
    assert np.isclose(bridge_min_from_uniform(0.3, -0.2, 1.0, 1.0, 1.0), -0.2)
    v = 0.3
    assert np.isclose(bridge_min_from_uniform(0.0, 0.0, 2.0, 1.5, v),
                      -np.sqrt(-1.5**2 * 2.0 * np.log(v) / 2))


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 5), st.floats(0.1, 3))
@settings(max_examples=50, deadline=None)
def test_bridge_min_below_endpoints(x0, x1, delta, sigma):
    m = bridge_min_sample(x0, x1, delta, sigma, create_stream(24), size=200)
    assert np.all(m <= min(x0, x1))


@pytest.fixture(scope="module")
def refined_zero_bridges():
    # depth-14 midpoint refinement of 10^5 standard bridges 0 -> 0 on [0, 1]
    return refined_bridge_extremes(0.0, 0.0, 1.0, 1.0, 14, 10**5, create_stream(25))


def test_cross_prob_against_refinement(refined_zero_bridges):
    _, mx = refined_zero_bridges
    N = mx.size
    for level in (1.5, 2.0):
        p = bridge_cross_prob(0.0, 0.0, 1.0, level, 1.0)
        freq = np.mean(mx >= level)
        se = np.sqrt(p * (1 - p) / N)
        assert abs(freq - p) < 3 * se, (level, freq, p, se)


def test_bridge_min_against_refinement(refined_zero_bridges):
    mn, _ = refined_zero_bridges
    exact = bridge_min_sample(0.0, 0.0, 1.0, 1.0, create_stream(26), size=mn.size)
    assert stats.ks_2samp(exact, mn).statistic < 0.01


def test_hit_time_matches_truncated_inverse_gaussian():
    # BM with drift from 0: the first passage over L, given it happens before delta,
    # is IG(L/mu, L^2/sigma^2) truncated to (0, delta)
    s = create_stream(27)
    mu, sigma, L, delta, N = 0.8, 1.2, 1.0, 2.0, 2 * 10**5
    x1 = mu * delta + sigma * np.sqrt(delta) * s.normal(N)
    hit = s.uniform(N) < bridge_cross_prob(0.0, x1, delta, L, sigma)
    theta = bridge_hit_time_sample(np.zeros(hit.sum()), x1[hit], delta, L, sigma, s)
    ig = s.inverse_gaussian(L / mu, L**2 / sigma**2, 4 * N)
    ig = ig[ig < delta]
    assert np.all((theta >= 0) & (theta <= delta))
    assert stats.ks_2samp(theta, ig).statistic < ks_crit2(theta.size, ig.size)


def test_argmin_time_is_arcsine():
    # argmin of BM on [0, 1] follows the arcsine law
    def trial(i):
        s = create_stream(28, i)
        N = 10**5
        x1 = s.normal(N)
        m = bridge_min_sample(0.0, x1, 1.0, 1.0, s)
        t = bridge_argmin_time_sample(0.0, x1, 1.0, m, 1.0, s)
        return stats.kstest(t, stats.arcsine.cdf).statistic, 1.358 / np.sqrt(N)
    assert ks_pass_rate(trial) >= 0.85


def test_argmin_time_edges():
    s = create_stream(29)
    assert bridge_argmin_time_sample(0.0, 1.0, 2.0, 0.0, 1.0, s) == 0.0
    assert bridge_argmin_time_sample(1.0, 0.0, 2.0, 0.0, 1.0, s) == 2.0


# -- Bessel(3) ----------------------------------------------------------------------

def test_bessel_grid_basics(stream):
    g = sample_bessel3_at(np.array([0.0, 0.5, 1.0, 4.0]), stream)
    assert g.values[0] == 0.0 and np.all(g.values[1:] > 0)
    with pytest.raises(InvalidParameter):
        sample_bessel3_at(np.array([1.0, 0.5]), stream)


def test_bessel_at_one_chi3_mean():
    r = bessel3_step(np.zeros(10**6), 1.0, create_stream(30))
    assert abs(r.mean() - 2 * np.sqrt(2 / np.pi)) < 0.005


def test_two_sided_bessel(stream):
    off = np.array([-3.0, -0.5, 0.0, 0.25, 2.0])
    g = sample_two_sided_bessel3(off, stream)
    assert g.values[2] == 0.0 and np.all(np.delete(g.values, 2) > 0)


# -- path mappings ------------------------------------------------------------------

@pytest.mark.parametrize("vals,expected", [([0, -1, -2], [0, 0, 0]), ([0, 1, 2], [0, 1, 2]),
                                           ([0, -1, 1], [0, 0, 2])])
def test_reflect_examples(vals, expected):
    assert np.array_equal(reflect(_grid(vals)).values, expected)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
@settings(max_examples=100, deadline=None)
def test_reflect_nonnegative(tail):
    r = reflect(_grid([0.0] + tail))
    assert np.all(r.values >= 0) and r.values[0] == 0


@pytest.mark.parametrize("vals,expected", [([0, -1, -2], 0.0), ([0, -1, 1], 0.25), ([0, 1, 2], 0.5)])
def test_busy_period_examples(vals, expected):
    assert busy_period(_grid(vals, n=4), 2) == expected


def test_busy_period_range():
    with pytest.raises(IndexError):
        busy_period(_grid([0, 1]), 2)
