import numpy as np
import pytest

from euler_errors.rng import create_stream

# Two-sample KS critical value at 95% for two samples of size n.
def ks_crit2(n1, n2, slack=1.0):
    return slack * 1.358 * np.sqrt((n1 + n2) / (n1 * n2))


def refined_bridge_extremes(x0, x1, delta, sigma, depth, size, s, rows=256):
    """Min and max over ``2**depth`` recursive midpoint refinements of bridges from x0 to x1.

    Brute-force oracle for the exact bridge formulas.
    """
    mins, maxs = [], []
    for start in range(0, size, rows):
        r = min(rows, size - start)
        v = np.empty((r, 2))
        v[:, 0], v[:, 1] = x0, x1
        dt = delta
        for _ in range(depth):
            mid = 0.5 * (v[:, :-1] + v[:, 1:]) + 0.5 * sigma * np.sqrt(dt) * s.normal((r, v.shape[1] - 1))
            w = np.empty((r, 2 * v.shape[1] - 1))
            w[:, 0::2], w[:, 1::2] = v, mid
            v = w
            dt /= 2
        mins.append(v.min(axis=1))
        maxs.append(v.max(axis=1))
    return np.concatenate(mins), np.concatenate(maxs)


def ks_pass_rate(trial, n_trials=20, alpha_crit=None):
    """Fraction of independent trials whose KS statistic is below the 95% critical value.

    ``trial(i)`` returns ``(statistic, critical_value)``. A calibrated sampler passes
    about 95% of trials; requiring 17 of 20 fails a correct sampler with probability
    about 1.6%, while a biased one fails almost every trial.
    """
    hits = sum(stat < crit for stat, crit in (trial(i) for i in range(n_trials)))
    return hits / n_trials


@pytest.fixture
def stream():
    return create_stream(12345, 0)
