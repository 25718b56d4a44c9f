"""Brownian paths on meshes and the bridge machinery used as continuous-time oracle.

The bridge samplers here are exact given the mesh values:

* ``bridge_cross_prob`` / ``bridge_min_sample``: the classical reflection
  formulas for the maximum / minimum of a Brownian bridge.
* ``bridge_hit_time_sample``: first passage time of a level inside a bridge,
  conditioned on the passage happening. Writing ``theta = delta * V / (1 + V)``
  turns the conditional density into an inverse-Gaussian law for ``V``.
* ``bridge_argmin_time_sample``: location of the bridge minimum given its
  value; with the same change of variables it becomes a two-component
  inverse-Gaussian mixture.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .rng import InvalidParameter, Stream


@dataclass(frozen=True)
class PathGrid:
    """Process values on a strictly increasing time mesh starting at 0."""

    times: np.ndarray
    values: np.ndarray
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            raise InvalidParameter("times and values must be 1-D arrays of equal, nonzero length")
        if t[0] != 0.0 or v[0] != 0.0:
            raise InvalidParameter("paths start at time 0 with value 0")
        if np.any(np.diff(t) <= 0):
            raise InvalidParameter("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> float:
        """Mesh density 1/dt for a regular mesh (uses the first step)."""
        return 1.0 / (self.times[1] - self.times[0]) if len(self) > 1 else np.inf

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([f"{t:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, mu: float = 0.0, sigma: float = 1.0) -> "PathGrid":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1], mu, sigma)


@dataclass(frozen=True)
class BarrierSpec:
    """Continuous nondecreasing barrier with ``b(0) > 0``.

    ``evaluate`` and ``derivative`` must accept numpy arrays.
    """

    evaluate: Callable[[np.ndarray], np.ndarray]
    derivative: Callable[[np.ndarray], np.ndarray]
    constant: bool = False
    b0: float = field(init=False)

    def __post_init__(self):
        b0 = float(self.evaluate(np.asarray(0.0)))
        if not b0 > 0:
            raise InvalidParameter(f"barrier must start strictly above 0, got b(0)={b0}")
        object.__setattr__(self, "b0", b0)

    def __call__(self, t):
        return self.evaluate(np.asarray(t, dtype=float))

    @classmethod
    def const(cls, level: float) -> "BarrierSpec":
        level = float(level)
        return cls(lambda t: np.full(np.shape(t), level) if np.ndim(t) else level,
                   lambda t: np.zeros(np.shape(t)) if np.ndim(t) else 0.0,
                   constant=True)

    @classmethod
    def linear(cls, level: float, slope: float) -> "BarrierSpec":
        if slope < 0:
            raise InvalidParameter("barrier must be nondecreasing")
        return cls(lambda t: level + slope * np.asarray(t),
                   lambda t: slope + 0.0 * np.asarray(t),
                   constant=(slope == 0))

    def check(self, times) -> None:
        """Verify monotonicity and a finite derivative on the sampled points."""
        t = np.asarray(times, dtype=float)
        vals = self(t)
        if np.any(np.diff(vals) < 0):
            raise InvalidParameter("barrier is decreasing on the sampled mesh")
        d = self.derivative(t[t > 0])
        if not np.all(np.isfinite(d)):
            raise InvalidParameter("barrier derivative is not finite on the sampled mesh")


@dataclass(frozen=True)
class BesselGrid:
    offsets: np.ndarray
    values: np.ndarray


# -- path construction ------------------------------------------------------

def sample_bm_grid(mu: float, sigma: float, n: int, horizon: float, s: Stream,
                   degenerate: bool = False) -> PathGrid:
    """Brownian motion with drift on the mesh ``{k/n : k = 0..ceil(n*horizon)}``.

    ``sigma == 0`` is rejected unless ``degenerate=True`` (test fixtures).
    """
    if sigma < 0 or (sigma == 0 and not degenerate):
        raise InvalidParameter(f"sigma must be > 0, got {sigma}")
    if n <= 0 or horizon <= 0 or n * horizon < 1:
        raise InvalidParameter("need n > 0, horizon > 0 and n*horizon >= 1")
    k = int(np.ceil(n * horizon - 1e-12))
    dt = 1.0 / n
    times = np.arange(k + 1) * dt
    if sigma == 0:
        values = mu * times
    else:
        inc = mu * dt + sigma * np.sqrt(dt) * s.normal(k)
        values = np.concatenate(([0.0], np.cumsum(inc)))
    return PathGrid(times, values, mu, sigma)


def refine_bridge(p: PathGrid, depth: int, s: Stream) -> PathGrid:
    """Split every interval ``2**depth`` times by recursive bridge midpoints."""
    if depth < 1:
        raise InvalidParameter("depth must be >= 1")
    times, values = p.times, p.values
    for _ in range(depth):
        dt = np.diff(times)
        mid_t = times[:-1] + 0.5 * dt
        mid_v = 0.5 * (values[:-1] + values[1:])
        if p.sigma > 0:
            mid_v = mid_v + 0.5 * p.sigma * np.sqrt(dt) * s.normal(dt.size)
        t2 = np.empty(2 * times.size - 1)
        v2 = np.empty_like(t2)
        t2[0::2], t2[1::2] = times, mid_t
        v2[0::2], v2[1::2] = values, mid_v
        times, values = t2, v2
    return PathGrid(times, values, p.mu, p.sigma)


# -- exact bridge functionals -----------------------------------------------

def bridge_cross_prob(x0, x1, delta, level, sigma):
    """P(max of a Brownian bridge from x0 to x1 over ``delta`` >= level)."""
    x0, x1, level = np.asarray(x0, float), np.asarray(x1, float), np.asarray(level, float)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        p = np.exp(-2.0 * (level - x0) * (level - x1) / (sigma * sigma * delta))
    p = np.where((x0 >= level) | (x1 >= level), 1.0, p)
    return float(p) if p.ndim == 0 else p


def bridge_min_from_uniform(x0, x1, delta, sigma, v):
    """Invert P(min <= z) = exp(-2 (x0-z)(x1-z) / (sigma^2 delta)) at ``v``."""
    d = x0 - x1
    return 0.5 * ((x0 + x1) - np.sqrt(d * d - 2.0 * sigma * sigma * delta * np.log(v)))


def bridge_min_sample(x0, x1, delta, sigma, s: Stream, size=None):
    """Exact draw of the minimum of a Brownian bridge."""
    if size is None:
        size = np.broadcast(np.asarray(x0), np.asarray(x1), np.asarray(delta)).shape or None
    v = s.uniform(size)
    m = bridge_min_from_uniform(x0, x1, delta, sigma, v)
    # sqrt rounding can leave m a hair above min(x0, x1)
    return np.minimum(m, np.minimum(x0, x1))


def bridge_hit_time_sample(x0, x1, delta, level, sigma, s: Stream):
    """First time a bridge from ``x0`` (below ``level``) reaches ``level``,
    conditioned on it doing so before ``delta``.

    Works for either side: pass ``x0 > level`` for a downward passage.
    """
    x0, x1 = np.asarray(x0, float), np.asarray(x1, float)
    a = np.abs(level - x0)
    c = np.abs(x1 - level)
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(c > 0, a / c, np.inf)
        shape = a * a / (sigma * sigma * delta)
    v = s.inverse_gaussian(mean, np.where(a > 0, shape, 1.0), np.shape(mean) or None)
    with np.errstate(invalid="ignore"):
        frac = np.where(np.isinf(v), 1.0, v / (1.0 + v))
    theta = np.where(a > 0, delta * frac, 0.0)
    return float(theta) if np.ndim(theta) == 0 else theta


def bridge_argmin_time_sample(x0, x1, delta, m, sigma, s: Stream):
    """Location of the minimum of a bridge from ``x0`` to ``x1`` given the minimum ``m``."""
    x0, x1, m = np.asarray(x0, float), np.asarray(x1, float), np.asarray(m, float)
    a = np.maximum(x0 - m, 0.0)
    b = np.maximum(x1 - m, 0.0)
    shape = np.broadcast(a, b, np.asarray(delta)).shape or None
    ca = a * a / (2.0 * sigma * sigma * delta)
    cb = b * b / (2.0 * sigma * sigma * delta)
    pick = s.uniform(shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = pick * (a + b) < b
        # component 1: V ~ IG(sqrt(ca/cb), 2 ca); component 2: 1/V ~ IG(sqrt(cb/ca), 2 cb)
        mean = np.where(first, np.sqrt(ca / cb), np.sqrt(cb / ca))
        lam = np.where(first, 2.0 * ca, 2.0 * cb)
        safe = (lam > 0) & np.isfinite(mean)
        w = s.inverse_gaussian(np.where(safe, mean, 1.0), np.where(safe, lam, 1.0), shape)
        frac = np.where(first, w / (1.0 + w), 1.0 / (1.0 + w))
    frac = np.where(a == 0, 0.0, np.where(b == 0, 1.0, frac))
    theta = delta * frac
    return float(theta) if np.ndim(theta) == 0 else theta


# -- Bessel(3) -------------------------------------------------------------

def bessel3_step(x, dt, s: Stream):
    """Bessel(3) value after time ``dt`` from ``x`` (norm of a shifted 3-D Gaussian)."""
    x = np.asarray(x, float)
    sd = np.sqrt(dt)
    z = s.normal((3,) + x.shape)
    return np.sqrt((x + sd * z[0]) ** 2 + (sd * z[1]) ** 2 + (sd * z[2]) ** 2)


def sample_bessel3_at(offsets, s: Stream) -> BesselGrid:
    """One-sided standard Bessel(3) at the given nondecreasing offsets >= 0."""
    off = np.asarray(offsets, dtype=float)
    if off.ndim != 1 or np.any(off < 0) or np.any(np.diff(off) < 0):
        raise InvalidParameter("offsets must be sorted and nonnegative")
    dt = np.diff(np.concatenate(([0.0], off)))
    inc = np.sqrt(dt)[:, None] * s.normal((off.size, 3))
    vec = np.cumsum(inc, axis=0)
    return BesselGrid(off, np.sqrt(np.sum(vec * vec, axis=1)))


def sample_two_sided_bessel3(offsets, s: Stream) -> BesselGrid:
    """Two independent legs glued at 0, evaluated at arbitrary real offsets."""
    off = np.asarray(offsets, dtype=float)
    vals = np.empty_like(off)
    pos = off >= 0
    right = sample_bessel3_at(np.sort(off[pos]), s)
    left = sample_bessel3_at(np.sort(-off[~pos]), s)
    vals[np.flatnonzero(pos)[np.argsort(off[pos], kind="stable")]] = right.values
    vals[np.flatnonzero(~pos)[np.argsort(-off[~pos], kind="stable")]] = left.values
    return BesselGrid(off, vals)


# -- path mappings -----------------------------------------------------------

def reflect(p: PathGrid) -> PathGrid:
    """X(t) - min_{s<=t} X(s) on the mesh."""
    v = p.values - np.minimum.accumulate(p.values)
    # PathGrid insists on a zero start, which holds since values[0] == 0
    return PathGrid(p.times, v, p.mu, p.sigma)


def busy_period(p: PathGrid, t_index: int) -> float:
    """Time since the last mesh point (up to ``t_index``) where the running minimum was attained."""
    if not 0 <= t_index < len(p):
        raise IndexError(f"t_index {t_index} outside [0, {len(p)})")
    v = p.values[: t_index + 1]
    at_min = v == np.minimum.accumulate(v)
    last = np.flatnonzero(at_min)[-1]
    return float(p.times[t_index] - p.times[last])

