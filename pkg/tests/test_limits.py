import numpy as np
import pytest
from scipy import stats

from conftest import ks_crit2
from euler_errors.analysis import beta_constant
from euler_errors.limits import (hit_limit_batch, min_limit_batch, sample_hit_limit,
                                 sample_min_limit)
from euler_errors.rng import InvalidParameter, create_stream


def test_single_draw_types():
    s = create_stream(60)
    h = sample_hit_limit(1.0, s)
    m = sample_min_limit(1.0, 1e-4, s)
    assert h.time_comp >= h.u and h.pos_comp > 0 and 0 < h.u < 1
    assert m.pos_comp > 0 and 0 < m.u < 1


def test_hit_limit_invariants_and_k0_branch():
    t, p, u = hit_limit_batch(10**5, 1.0, create_stream(61))
    assert np.all(p > 0) and np.all(t >= u) and np.all((u > 0) & (u < 1))
    k = t - u
    assert np.allclose(k, np.round(k))
    immediate = k == 0
    # P(W(U) > 0) = 1/2
    assert abs(immediate.mean() - 0.5) < 0.01


def test_hit_limit_mean():
    _, p, _ = hit_limit_batch(10**6, 1.0, create_stream(62))
    assert abs(p.mean() - beta_constant()) < 0.005


def test_min_limit_invariants():
    t, p, u = min_limit_batch(10**5, 1.0, create_stream(63))
    assert np.all(p > 0) and np.all((u > 0) & (u < 1))
    k = t - u
    assert np.allclose(k, np.round(k), rtol=0, atol=1e-9)


def test_min_limit_mean():
    _, p, _ = min_limit_batch(10**6, 1.0, create_stream(64), eps=1e-6)
    assert abs(p.mean() - beta_constant()) < 0.005


def test_min_limit_eps_self_consistency():
    a = min_limit_batch(10**5, 1.0, create_stream(65), eps=1e-4)
    b = min_limit_batch(10**5, 1.0, create_stream(65), eps=1e-5)
    same = np.mean(a[1] == b[1])
    assert same >= 1 - 1e-4


def test_sigma_scaling():
    N = 10**5
    _, p2, _ = hit_limit_batch(N, 2.0, create_stream(66))
    _, p1, _ = hit_limit_batch(N, 1.0, create_stream(67))
    assert stats.ks_2samp(p2, 2 * p1).statistic < 0.0122


def test_parameter_errors():
    s = create_stream(68)
    with pytest.raises(InvalidParameter):
        hit_limit_batch(10, 0.0, s)
    with pytest.raises(InvalidParameter):
        min_limit_batch(10, 1.0, s, eps=0.0)


def test_hit_limit_against_lattice_walk():
    # brute force: walk W(U + k) one lattice step at a time
    s = create_stream(69)
    N, cap = 20000, 10**5
    u = s.uniform(N)
    w = np.sqrt(u) * s.normal(N)
    k = np.zeros(N)
    active = np.flatnonzero(w <= 0)
    for _ in range(cap):
        if active.size == 0:
            break
        w[active] += s.normal(active.size)
        k[active] += 1
        active = active[w[active] <= 0]
    done = np.ones(N, bool)
    done[active] = False
    t_ref, p_ref = (u + k)[done], w[done]
    t, p, _ = hit_limit_batch(N, 1.0, create_stream(70))
    # censoring drops the slowest ~0.2% from the brute-force side only
    assert stats.ks_2samp(p, p_ref).statistic < ks_crit2(N, done.sum(), 1.5)
    q = np.quantile(t, [0.1, 0.5, 0.9])
    q_ref = np.quantile(t_ref, [0.1, 0.5, 0.9])
    assert np.allclose(q[:2], q_ref[:2], rtol=0.1, atol=0.05)


def test_min_limit_against_lattice_bessel():
    # brute force: two-sided Bessel(3) on the lattice U + k, |k| <= K, via 3-d Gaussian norms
    s = create_stream(71)
    N, K, rows = 5000, 3000, 250
    mins, args = [], []
    for start in range(0, N, rows):
        u = s.uniform(rows)

        def leg(first):
            dt = np.concatenate((first[:, None], np.ones((rows, K - 1))), axis=1)
            inc = np.sqrt(dt)[..., None] * s.normal((rows, K, 3))
            return np.sqrt(np.sum(np.cumsum(inc, axis=1) ** 2, axis=2))

        right = leg(u)          # offsets u, u+1, ...
        left = leg(1.0 - u)     # offsets u-1, u-2, ...
        mr, ml = right.min(axis=1), left.min(axis=1)
        jr, jl = right.argmin(axis=1), left.argmin(axis=1)
        mins.append(np.minimum(mr, ml))
        args.append(np.where(mr <= ml, u + jr, u - 1 - jl))
    mins, args = np.concatenate(mins), np.concatenate(args)
    t, p, _ = min_limit_batch(N, 1.0, create_stream(72))
    assert stats.ks_2samp(p, mins).statistic < ks_crit2(N, N, 1.5)
    assert stats.ks_2samp(t, args).statistic < ks_crit2(N, N, 1.5)
