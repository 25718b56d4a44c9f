import math

import numpy as np
import pytest

from euler_errors.analysis import beta_constant
from euler_errors.correction import (BarrierQuery, cross_terminal_prob, joint_cross_terminal_prob,
                                     mc_continuous_prob, mc_discrete_prob)
from euler_errors.rng import InvalidParameter, create_stream


def test_query_validation():
    with pytest.raises(InvalidParameter):
        BarrierQuery(b=1.0, y=1.5, t=1.0, n=10)
    with pytest.raises(InvalidParameter):
        BarrierQuery(b=0.0, y=-1.0, t=1.0, n=10)
    with pytest.raises(InvalidParameter):
        BarrierQuery(b=1.0, y=0.0, t=0.35, n=10)


def test_shift_is_sigma_beta_over_sqrt_n():
    q = BarrierQuery(2.0, 1.9, 1.0, 50, 0.1, 1.7)
    assert q.shift == 1.7 * beta_constant() / math.sqrt(50)
    assert joint_cross_terminal_prob(q, False) == cross_terminal_prob(2.0 + q.shift, 1.9, 1.0, 0.1, 1.7)


def test_far_barrier_vanishes():
    assert joint_cross_terminal_prob(BarrierQuery(40.0, 0.0, 1.0, 10)) < 1e-300 + 1e-200


@pytest.mark.parametrize("mu,sigma,b,y", [(0.0, 1.0, 2.0, 0.0), (0.0, 1.0, 1.0, 1.0),
                                          (0.5, 1.3, 1.5, -0.5), (-0.4, 0.8, 1.0, 1.0)])
def test_closed_form_matches_continuous_mc(mu, sigma, b, y):
    q = BarrierQuery(b, y, 1.0, 50, mu, sigma)
    est, se = mc_continuous_prob(q, 10**6, create_stream(110))
    assert abs(est - joint_cross_terminal_prob(q, True)) < 3 * se


def test_single_monitoring_point():
    # n t = 1: the event is {B(t) >= b, B(t) > y} = {B(t) >= b}
    q = BarrierQuery(b=1.0, y=0.5, t=1.0, n=1, mu=0.2, sigma=1.0)
    est, se = mc_discrete_prob(q, 10**6, create_stream(111))
    exact = 0.5 * math.erfc((1.0 - 0.2) / math.sqrt(2))
    assert abs(est - exact) < 3 * se


def test_very_negative_y_reduces_to_crossing():
    q = BarrierQuery(b=1.0, y=-50.0, t=1.0, n=20)
    q_inf = BarrierQuery(b=1.0, y=-1e6, t=1.0, n=20)
    a = mc_discrete_prob(q, 10**5, create_stream(112))[0]
    b = mc_discrete_prob(q_inf, 10**5, create_stream(112))[0]
    assert a == b
    # discrete monitoring of the running max
    s = create_stream(113)
    x = np.cumsum(s.normal((10**5, 20)) / math.sqrt(20), axis=1)
    assert abs(a - np.mean(x.max(axis=1) >= 1.0)) < 4 * math.sqrt(a * (1 - a) / 10**5) * 1.5


def test_monotonicity():
    base = dict(t=1.0, n=50, mu=0.1, sigma=1.0)
    bs = [joint_cross_terminal_prob(BarrierQuery(b, 0.5, **base), False) for b in (1.0, 1.5, 2.0, 3.0)]
    assert all(x >= y for x, y in zip(bs, bs[1:]))
    ys = [joint_cross_terminal_prob(BarrierQuery(2.0, y, **base), False) for y in (2.0, 1.0, 0.0, -3.0)]
    assert all(x <= y for x, y in zip(ys, ys[1:]))


def test_correction_beats_uncorrected():
    q = BarrierQuery(b=2.0, y=1.9, t=1.0, n=50, mu=0.0, sigma=1.0)
    est, se = mc_discrete_prob(q, 10**6, create_stream(114))
    dc = abs(est - joint_cross_terminal_prob(q, False))
    du = abs(est - joint_cross_terminal_prob(q, True))
    assert dc < du and dc < max(0.002, 3 * se)


def test_error_decreases_with_n():
    errs, ses = [], []
    for i, n in enumerate((25, 100, 400)):
        q = BarrierQuery(b=2.0, y=1.9, t=1.0, n=n)
        est, se = mc_discrete_prob(q, 4 * 10**5, create_stream(115 + i))
        errs.append(abs(est - joint_cross_terminal_prob(q, False)))
        ses.append(se)
    for k in range(2):
        assert errs[k + 1] <= errs[k] + 2 * max(ses[k], ses[k + 1])
