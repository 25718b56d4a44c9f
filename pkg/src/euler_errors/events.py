"""Per-path event detection, error triplets and the zoomed-in error mappings.

These functions work on a single ``PathGrid`` and are the literal reference
construction; ``batch`` provides the vectorised engines used for large
experiments, and the tests check that both produce the same laws.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Union

import numpy as np

from .paths import (BarrierSpec, PathGrid, bridge_argmin_time_sample, bridge_cross_prob,
                    bridge_hit_time_sample, bridge_min_sample, refine_bridge, sample_bm_grid)
from .rng import InvalidParameter, Stream


class _NoHit:
    """Marker for an event that does not happen on the available horizon."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_HIT"

    def __bool__(self) -> bool:
        return False


NO_HIT = _NoHit()


class GridHit(NamedTuple):
    index: int
    tau_n: float
    value: float


@dataclass(frozen=True)
class HitRecord:
    tau_n: float
    value_n: float
    tau_cont: float
    value_cont: float


@dataclass(frozen=True)
class ErrorTriplet:
    time_err: float
    pos_err: float
    frac: float


@dataclass(frozen=True)
class ProcessParams:
    mu: float = 0.0
    sigma: float = 1.0
    horizon: float = 1.0


@dataclass(frozen=True)
class ZoomedProcess:
    """``Z(s) = sqrt(m) (X(T + s/m) - X(T))`` seen at the grid points.

    Grid point ``ceil(m T) + k`` sits at offset ``u + k`` with ``u = ceil(m T) - m T``;
    ``values[i]`` is ``Z(u + lattice[i])``.
    """

    center_time: float
    scale: float
    center_value: float
    u: float
    lattice: np.ndarray
    values: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return self.u + self.lattice

    def at(self, k: int) -> float:
        i = int(k - self.lattice[0])
        if not 0 <= i < self.lattice.size:
            raise IndexError(f"lattice index {k} not available")
        return float(self.values[i])

    def value_at_center(self) -> float:
        return float(np.sqrt(self.scale) * (self.center_value - self.center_value))


def _frac(x: float) -> float:
    return float(np.ceil(x) - x)


# -- barrier hitting ---------------------------------------------------------

def detect_hit_grid(p: PathGrid, b: BarrierSpec) -> Union[GridHit, _NoHit]:
    bvals = np.asarray(b(p.times), dtype=float)
    hit = np.flatnonzero(p.values >= bvals)
    if hit.size == 0:
        return NO_HIT
    k = int(hit[0])
    return GridHit(k, float(p.times[k]), float(p.values[k]))


def _first_crossing(times, values, bvals, sigma, s: Stream):
    """Exact first passage of the piecewise-linear barrier through ``bvals``."""
    dt = np.diff(times)
    gl = values[:-1] - bvals[:-1]
    gr = values[1:] - bvals[1:]
    if sigma > 0:
        p = bridge_cross_prob(gl, gr, dt, 0.0, sigma)
        crossed = s.uniform(dt.size) < p
    else:
        crossed = (gl >= 0) | (gr >= 0)
    idx = np.flatnonzero(crossed)
    if idx.size == 0:
        return None
    j = int(idx[0])
    if gl[j] >= 0:
        return float(times[j])
    if sigma > 0:
        theta = bridge_hit_time_sample(gl[j], gr[j], dt[j], 0.0, sigma, s)
    else:
        theta = dt[j] * (-gl[j]) / (gr[j] - gl[j])
    return float(times[j] + theta)


def locate_hit_continuous(p: PathGrid, b: BarrierSpec, depth: int, s: Stream):
    """Continuous passage time of the path through ``b`` and ``b`` at that time.

    For a constant barrier the passage time is sampled exactly from the grid
    values and ``depth`` is not used. Otherwise the path is refined ``2**depth``
    times and the barrier is taken as linear between the refined points.
    """
    if depth < 0:
        raise InvalidParameter("depth must be >= 0")
    q = p
    if not b.constant and depth > 0:
        q = refine_bridge(p, depth, s)
    tau = _first_crossing(q.times, q.values, np.asarray(b(q.times), dtype=float), p.sigma, s)
    if tau is None:
        return NO_HIT
    return tau, float(b(tau))


def hit_record(p: PathGrid, b: BarrierSpec, depth: int, s: Stream) -> Union[HitRecord, _NoHit]:
    grid = detect_hit_grid(p, b)
    cont = locate_hit_continuous(p, b, depth, s)
    if grid is NO_HIT or cont is NO_HIT:
        return NO_HIT
    return HitRecord(grid.tau_n, grid.value, cont[0], cont[1])


def error_triplet_hit(n: int, b: BarrierSpec, params: ProcessParams, depth: int,
                      s: Stream) -> Union[ErrorTriplet, _NoHit]:
    p = sample_bm_grid(params.mu, params.sigma, n, params.horizon, s)
    rec = hit_record(p, b, depth, s)
    if rec is NO_HIT:
        return NO_HIT
    return ErrorTriplet(n * (rec.tau_n - rec.tau_cont),
                        np.sqrt(n) * (rec.value_n - rec.value_cont),
                        _frac(n * rec.tau_cont))


# -- minima --------------------------------------------------------------------

def grid_argmin(p: PathGrid, window: Optional[range] = None):
    """First grid index attaining the minimum over ``window`` (default: whole path)."""
    if window is None:
        window = range(len(p))
    if len(window) == 0:
        raise InvalidParameter("empty window")
    if window.start < 0 or window[-1] >= len(p):
        raise InvalidParameter("window outside the path")
    idx = np.asarray(window)
    k = int(idx[np.argmin(p.values[idx])])
    return k, float(p.values[k])


def continuous_min(p: PathGrid, s: Stream):
    """Exact minimum of the Brownian path through the grid values, and its location."""
    t, v = p.times, p.values
    if p.sigma == 0 or len(p) == 1:
        k = int(np.argmin(v))
        return float(t[k]), float(v[k])
    dt = np.diff(t)
    mins = bridge_min_sample(v[:-1], v[1:], dt, p.sigma, s)
    j = int(np.argmin(mins))
    m = float(mins[j])
    theta = bridge_argmin_time_sample(v[j], v[j + 1], dt[j], m, p.sigma, s)
    return float(t[j] + theta), m


def min_stop_gap(mu: float, sigma: float, eps: float) -> float:
    """Rise above the running minimum after which a new minimum has probability <= eps."""
    return sigma * sigma / (2.0 * mu) * np.log(1.0 / eps)


def global_min_truncated(mu: float, sigma: float, n: int, eps: float, s: Stream,
                         degenerate: bool = False, block: int = 4096):
    """Grid path on ``{k/n}`` extended until it has risen ``min_stop_gap`` above its minimum."""
    if not mu > 0:
        raise InvalidParameter("the global minimum needs mu > 0")
    if not 0 < eps < 1:
        raise InvalidParameter("eps must lie in (0, 1)")
    if sigma < 0 or (sigma == 0 and not degenerate):
        raise InvalidParameter("sigma must be > 0")
    gap = min_stop_gap(mu, sigma, eps)
    dt = 1.0 / n
    vals = [np.zeros(1)]
    last, run_min, count = 0.0, 0.0, 1
    while True:
        inc = mu * dt + (sigma * np.sqrt(dt) * s.normal(block) if sigma > 0 else 0.0)
        new = last + np.cumsum(np.broadcast_to(inc, (block,)))
        cm = np.minimum(run_min, np.minimum.accumulate(new))
        hit = np.flatnonzero(new - cm >= gap)
        if hit.size:
            vals.append(new[: hit[0] + 1])
            count += hit[0] + 1
            break
        vals.append(new)
        count += block
        last, run_min = new[-1], cm[-1]
    values = np.concatenate(vals)
    times = np.arange(count) * dt
    return PathGrid(times, values, mu, sigma), count - 1


def _min_triplet(p: PathGrid, n: int, s: Stream) -> ErrorTriplet:
    k, gmin = grid_argmin(p)
    t_cont, m = continuous_min(p, s)
    return ErrorTriplet(k - n * t_cont, np.sqrt(n) * (gmin - m), _frac(n * t_cont))


def error_triplet_min(a: float, n: int, params: ProcessParams, s: Stream) -> ErrorTriplet:
    if abs(n * a - round(n * a)) > 1e-9 or round(n * a) < 1:
        raise InvalidParameter("n * a must be a positive integer")
    p = sample_bm_grid(params.mu, params.sigma, n, a, s)
    return _min_triplet(p, n, s)


def error_triplet_globalmin(mu: float, n: int, eps: float, s: Stream,
                            sigma: float = 1.0) -> ErrorTriplet:
    p, _ = global_min_truncated(mu, sigma, n, eps, s)
    return _min_triplet(p, n, s)


# -- zoomed-in processes and error mappings ----------------------------------------

def zoom(p: PathGrid, center_time: float, center_value: float, m: Optional[float] = None,
         first: Optional[int] = None) -> ZoomedProcess:
    """Zoomed process of the grid values around ``center_time``.

    Only grid points with index >= ``first`` are kept (default: all of them).
    """
    m = p.n if m is None else m
    c = int(np.ceil(m * center_time))
    start = 0 if first is None else first
    idx = np.arange(start, len(p))
    return ZoomedProcess(center_time, m, center_value, float(c - m * center_time),
                         idx - c, np.sqrt(m) * (p.values[idx] - center_value))


def zoom_barrier(b: BarrierSpec, z: ZoomedProcess) -> np.ndarray:
    """``sqrt(m) (b(T + s/m) - b(T))`` at the zoomed grid offsets."""
    c = np.ceil(z.scale * z.center_time)
    t = (c + z.lattice) / z.scale
    return np.sqrt(z.scale) * (np.asarray(b(t), dtype=float) - float(b(z.center_time)))


def apply_error_mapping_hit(u: float, zoomed: ZoomedProcess,
                            zoomed_barrier: Union[np.ndarray, Callable]):
    """``(u + k*, f(u + k*))`` with ``k* = min{k >= 0 : f(u+k) > g(u+k)}``."""
    sel = zoomed.lattice >= 0
    k = zoomed.lattice[sel]
    f = zoomed.values[sel]
    if callable(zoomed_barrier):
        g = np.asarray(zoomed_barrier(u + k), dtype=float)
    else:
        g = np.asarray(zoomed_barrier, dtype=float)[sel]
    above = np.flatnonzero(f > g)
    if above.size == 0:
        return NO_HIT
    i = above[0]
    return u + float(k[i]), float(f[i])


def apply_error_mapping_min(u: float, zoomed: ZoomedProcess, k_low: int, k_high: int):
    """``(u + k*, f(u + k*))`` with ``k*`` the first minimiser of ``f(u+k)`` on ``[k_low, k_high]``."""
    sel = (zoomed.lattice >= k_low) & (zoomed.lattice <= k_high)
    if not np.any(sel):
        raise InvalidParameter("empty lattice window")
    k = zoomed.lattice[sel]
    f = zoomed.values[sel]
    i = int(np.argmin(f))
    return u + float(k[i]), float(f[i])


def min_triplet_via_mapping(p: PathGrid, n: int, t_cont: float, m_cont: float) -> ErrorTriplet:
    """Triplet of a minimum experiment rebuilt from the zoomed process alone."""
    z = zoom(p, t_cont, m_cont, n)
    c = int(np.ceil(n * t_cont))
    time_err, pos_err = apply_error_mapping_min(z.u, z, -c, len(p) - 1 - c)
    return ErrorTriplet(time_err, pos_err, z.u)


def hit_triplet_via_mapping(p: PathGrid, b: BarrierSpec, n: int, tau: float):
    z = zoom(p, tau, float(b(tau)), n, first=int(np.ceil(n * tau)))
    out = apply_error_mapping_hit(z.u, z, zoom_barrier(b, z))
    if out is NO_HIT:
        return NO_HIT
    return ErrorTriplet(out[0], out[1], z.u)
