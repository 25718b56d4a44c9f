"""Direct samplers for the limit triplets.

Hit limit: ``(U + k*, sigma W(U + k*), U)`` with ``k* = min{k >= 0 : W(U+k) > 0}``.
Min limit: ``(U + argmin_k R(U+k), sigma min_k R(U+k), U)`` over all integers k,
R a two-sided Bessel(3) process.

Both are sampled without walking the lattice one step at a time. ``k*`` has
no finite mean (``P(k* > k) ~ 1/sqrt(pi k)``), so a naive walk would need
billions of steps for a handful of draws. Instead we skip through the
continuous path:

* hit: from a nonpositive lattice value ``x`` the path returns to 0 after a
  Levy time ``x**2 / Z**2``; from there the next lattice value is a fresh
  ``N(0, d)`` with ``d`` the distance to that lattice point.
* min: from a lattice value ``x`` above the running minimum ``m``, the future
  infimum of a Bessel(3) path is uniform on ``(0, x)``. If it stays above ``m``
  the leg is finished for good; otherwise the path first reaches ``m`` after
  a Brownian first-passage time and restarts as Bessel(3) from ``m``.

Each loop round finishes a path with probability bounded away from 0, so the
number of rounds is geometric-like and no truncation is involved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import bessel3_step
from .rng import InvalidParameter, Stream

MAX_ROUNDS = 10**9
# Above this many lattice steps a float64 loses the fractional part of the
# passage time; the distance to the next lattice point is then redrawn as a
# uniform, which is its limiting law.
_FRAC_LIMIT = 2.0**50


@dataclass(frozen=True)
class LimitTriplet:
    time_comp: float
    pos_comp: float
    u: float


def _next_lattice(theta, s: Stream):
    """Number of lattice steps to the first lattice point at or after ``theta`` (>= 1),
    and the leftover distance."""
    steps = np.maximum(np.ceil(theta), 1.0)
    d = steps - theta
    far = theta > _FRAC_LIMIT
    if np.any(far):
        d = np.where(far, s.uniform(theta.shape), d)
    return steps, d


def hit_limit_batch(size: int, sigma: float, s: Stream, drift: float = 0.0):
    """Arrays ``(time_comp, pos_comp, u)`` of the hit limit.

    ``drift`` is an optional drift per lattice unit for the walk (0 in the limit);
    it must be >= 0 so that the walk surely turns positive.
    """
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    if drift < 0:
        raise InvalidParameter("drift must be >= 0")
    u = s.uniform(size)
    x = drift * u + np.sqrt(u) * s.normal(size)
    k = np.zeros(size)
    active = np.flatnonzero(x <= 0)
    rounds = 0
    while active.size:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise RuntimeError("hit-limit sampler exceeded its round cap")
        gap = -x[active]
        theta = _return_time(gap, drift, s)
        steps, d = _next_lattice(theta, s)
        k[active] += steps
        x[active] = drift * d + np.sqrt(d) * s.normal(active.size)
        active = active[x[active] <= 0]
    return u + k, sigma * x, u


def _return_time(gap, drift: float, s: Stream):
    # first passage of a unit-variance BM with the given drift from -gap up to 0
    if drift > 0:
        t = s.inverse_gaussian(gap / drift, gap * gap, gap.shape)
    else:
        t = s.levy(gap * gap, gap.shape)
    return np.where(gap > 0, t, 0.0)


def _bessel_leg_min(t0, s: Stream):
    """Exact min and argmin (as lattice index from ``t0``) of a Bessel(3) leg
    observed at times ``t0, t0+1, t0+2, ...``."""
    size = t0.size
    x = bessel3_step(np.zeros(size), t0, s)
    m = x.copy()
    jm = np.zeros(size)
    j = np.zeros(size)
    # the current point is the running min, so the next lattice value is simply one step on
    x = bessel3_step(x, 1.0, s)
    j += 1.0
    active = np.arange(size)
    rounds = 0
    while active.size:
        rounds += 1
        if rounds > MAX_ROUNDS:
            raise RuntimeError("min-limit sampler exceeded its round cap")
        xa, ma = x[active], m[active]
        lower = xa < ma
        # new running minimum: record it and step one lattice unit
        if np.any(lower):
            idx = active[lower]
            m[idx] = x[idx]
            jm[idx] = j[idx]
            x[idx] = bessel3_step(x[idx], 1.0, s)
            j[idx] += 1.0
        above = active[~lower]
        if above.size:
            xa, ma = x[above], m[above]
            dips = xa * s.uniform(above.size) < ma
            go = above[dips]
            if go.size:
                gap = x[go] - m[go]
                theta = s.levy(gap * gap, go.size)
                steps, d = _next_lattice(theta, s)
                j[go] += steps
                x[go] = bessel3_step(m[go], d, s)
            active = np.concatenate((active[lower], go))
            active.sort()
        else:
            active = active[lower]
    return m, jm


def min_limit_batch(size: int, sigma: float, s: Stream, eps: float = 1e-4):
    """Arrays ``(time_comp, pos_comp, u)`` of the two-sided Bessel(3) min limit.

    The sampler is exact; ``eps`` is validated for interface compatibility
    with truncation-based samplers but no truncation takes place.
    """
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    if not 0 < eps < 1:
        raise InvalidParameter("eps must lie in (0, 1)")
    u = s.uniform(size)
    m_right, j_right = _bessel_leg_min(u, s)
    m_left, j_left = _bessel_leg_min(1.0 - u, s)
    right = m_right <= m_left
    k = np.where(right, j_right, -(j_left + 1.0))
    return u + k, sigma * np.minimum(m_right, m_left), u


def sample_hit_limit(sigma: float, s: Stream) -> LimitTriplet:
    t, p, u = hit_limit_batch(1, sigma, s)
    return LimitTriplet(float(t[0]), float(p[0]), float(u[0]))


def sample_min_limit(sigma: float, eps: float, s: Stream) -> LimitTriplet:
    t, p, u = min_limit_batch(1, sigma, s, eps)
    return LimitTriplet(float(t[0]), float(p[0]), float(u[0]))
