"""Gaussian random walks read off a Brownian path at integer times.

The walk is ``S_k = B(k)`` for a Brownian motion ``B`` with drift ``nu`` and
volatility ``sigma``; continuous-time quantities come from the bridges
between consecutive walk values. Per-path functions build the walk
explicitly; the ``*_batch`` versions run the vectorised engines with a unit
mesh.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import batch
from .events import NO_HIT, continuous_min, global_min_truncated, grid_argmin
from .paths import PathGrid, bridge_cross_prob, bridge_hit_time_sample, sample_bm_grid
from .rng import InvalidParameter, Stream

DEFAULT_MAX_STEPS = 10**7


@dataclass(frozen=True)
class CoupledWalk:
    path: PathGrid  # Brownian values at integer times
    nu: float
    sigma: float

    @property
    def walk(self) -> np.ndarray:
        return self.path.values

    @classmethod
    def sample(cls, steps: int, nu: float, sigma: float, s: Stream) -> "CoupledWalk":
        return cls(sample_bm_grid(nu, sigma, 1, steps, s), nu, sigma)


def overshoot_pair(m: float, sigma: float, nu: float, s: Stream,
                   max_steps: int = DEFAULT_MAX_STEPS, chunk: int = 4096):
    """``(tau_S - tau_B, S(tau_S) - m)`` for the first passage over level ``m``.

    Returns ``NO_HIT`` if the walk has not crossed within ``max_steps``.
    """
    if not m > 0:
        raise InvalidParameter("m must be > 0")
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    if nu < 0:
        raise InvalidParameter("nu must be >= 0")
    last, k0 = 0.0, 0
    tau_b = None
    while k0 < max_steps:
        w = last + np.cumsum(nu + sigma * s.normal(chunk))
        left = np.concatenate(([last], w[:-1]))
        if tau_b is None:
            p = bridge_cross_prob(left, w, 1.0, m, sigma)
            hit = np.flatnonzero(s.uniform(chunk) < p)
            if hit.size:
                j = hit[0]
                tau_b = k0 + j + bridge_hit_time_sample(left[j], w[j], 1.0, m, sigma, s)
        if tau_b is not None:
            over = np.flatnonzero(w >= m)
            if over.size:
                j = over[0]
                return float(k0 + j + 1 - tau_b), float(w[j] - m)
        last, k0 = w[-1], k0 + chunk
    return NO_HIT


def running_min_pair(n: int, sigma: float, s: Stream):
    """``(argmin S - argmin B, min S - min B)`` over ``[0, n]`` for a driftless walk."""
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    w = CoupledWalk.sample(n, 0.0, sigma, s)
    k, smin = grid_argmin(w.path)
    t, bmin = continuous_min(w.path, s)
    return float(k - t), float(smin - bmin)


def vanishing_drift_pair(nu: float, sigma: float, eps: float, s: Stream):
    """Global-minimum comparison for a walk with drift ``nu > 0``."""
    if not nu > 0:
        raise InvalidParameter("nu must be > 0")
    p, _ = global_min_truncated(nu, sigma, 1, eps, s)
    k, smin = grid_argmin(p)
    t, bmin = continuous_min(p, s)
    return float(k - t), float(smin - bmin)


# -- batched versions ----------------------------------------------------------

def overshoot_batch(size: int, m: float, sigma: float, nu: float, s: Stream):
    """Arrays ``(time_diff, overshoot)`` and the number of discarded paths."""
    hb = batch.hit_const_batch(size, m, nu, sigma, 1.0, s)
    return hb.time_err, hb.pos_gap, hb.discarded


def running_min_batch(size: int, n: int, sigma: float, s: Stream):
    if n < 1:
        raise InvalidParameter("n must be >= 1")
    mb = batch.min_batch(size, 1.0, 0.0, sigma, s, n_steps=n)
    return mb.grid_index - mb.cont_time, mb.grid_min - mb.cont_min


def vanishing_drift_batch(size: int, nu: float, sigma: float, eps: float, s: Stream):
    if not nu > 0:
        raise InvalidParameter("nu must be > 0")
    mb = batch.min_batch(size, 1.0, nu, sigma, s, eps=eps)
    return mb.grid_index - mb.cont_time, mb.grid_min - mb.cont_min
