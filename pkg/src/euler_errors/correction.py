"""Continuity correction for discretely monitored barrier events.

For drifted Brownian motion ``B`` and ``y <= b`` the reflection principle gives

    P(B(t) > y, max_{[0,t]} B >= b)
        = Phi_bar((b - mu t) / (sigma sqrt t))
          + exp(2 mu b / sigma^2) [Phi((-b - mu t) / (sigma sqrt t))
                                   - Phi((y - 2 b - mu t) / (sigma sqrt t))].

Monitoring only at ``k/n`` is approximated by the same formula with the
barrier moved up by ``sigma * beta / sqrt(n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import beta_constant
from .paths import bridge_cross_prob
from .rng import InvalidParameter, Stream

_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class BarrierQuery:
    b: float
    y: float
    t: float
    n: int
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidParameter("barrier level b must be > 0")
        if self.y > self.b:
            raise InvalidParameter("need y <= b")
        if not self.t > 0 or self.n < 1:
            raise InvalidParameter("need t > 0 and n >= 1")
        if not self.sigma > 0:
            raise InvalidParameter("sigma must be > 0")
        if abs(self.n * self.t - round(self.n * self.t)) > 1e-9:
            raise InvalidParameter("t must lie on the monitoring mesh (n*t integer)")

    @property
    def steps(self) -> int:
        return int(round(self.n * self.t))

    @property
    def shift(self) -> float:
        return self.sigma * beta_constant() / math.sqrt(self.n)


def _phi(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def cross_terminal_prob(b: float, y: float, t: float, mu: float, sigma: float) -> float:
    """``P(B(t) > y, max_{[0,t]} B >= b)`` for ``y <= b``."""
    if y > b:
        raise InvalidParameter("need y <= b")
    sd = sigma * math.sqrt(t)
    tail = 1.0 - _phi((b - mu * t) / sd)
    refl = _phi((-b - mu * t) / sd) - _phi((y - 2.0 * b - mu * t) / sd)
    if refl <= 0.0:
        return tail
    # combine in log space so that huge exp(2 mu b / sigma^2) cannot overflow
    return tail + math.exp(2.0 * mu * b / sigma**2 + math.log(refl))


def joint_cross_terminal_prob(q: BarrierQuery, continuous: bool = True) -> float:
    """Continuous-monitoring probability, or its corrected discrete-monitoring approximation."""
    level = q.b if continuous else q.b + q.shift
    return cross_terminal_prob(level, q.y, q.t, q.mu, q.sigma)


def mc_discrete_prob(q: BarrierQuery, N: int, s: Stream):
    """MC estimate of ``P(B(k/n) >= b for some k <= n t, B(t) > y)`` and its standard error."""
    if N < 1:
        raise InvalidParameter("N must be >= 1")
    k = q.steps
    dt = 1.0 / q.n
    rows = max(1, _CHUNK_CELLS // k)
    hits = 0
    for start in range(0, N, rows):
        r = min(rows, N - start)
        x = np.cumsum(q.mu * dt + q.sigma * math.sqrt(dt) * s.normal((r, k)), axis=1)
        hits += int(np.count_nonzero((x.max(axis=1) >= q.b) & (x[:, -1] > q.y)))
    p = hits / N
    return p, math.sqrt(p * (1.0 - p) / N)


def mc_continuous_prob(q: BarrierQuery, N: int, s: Stream):
    """MC estimate of the continuous-monitoring probability.

    Each path is sampled on the monitoring mesh and the crossing between mesh
    points is accounted for exactly by the bridge crossing probabilities
    (conditional expectation given the mesh values).
    """
    if N < 1:
        raise InvalidParameter("N must be >= 1")
    k = q.steps
    dt = 1.0 / q.n
    rows = max(1, _CHUNK_CELLS // k)
    vals = []
    for start in range(0, N, rows):
        r = min(rows, N - start)
        x = np.cumsum(q.mu * dt + q.sigma * math.sqrt(dt) * s.normal((r, k)), axis=1)
        left = np.concatenate((np.zeros((r, 1)), x[:, :-1]), axis=1)
        p = bridge_cross_prob(left, x, dt, q.b, q.sigma)
        p_hit = 1.0 - np.prod(1.0 - p, axis=1)
        vals.append(np.where(x[:, -1] > q.y, p_hit, 0.0))
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(N)) if N > 1 else 0.0
