"""Vectorised path engines for the discretisation-error experiments.

Time is measured in grid units throughout: the Euler mesh is ``{k h}`` with
``h = 1/n`` (or ``h = 1`` for the Gaussian-walk experiments), and returned
times are divided by ``h``.

``hit_const_batch``
    Constant barrier, unbounded horizon. The path is sampled on a
    geometrically growing set of grid points; the first interval whose bridge
    crosses the level is found with exact Bernoulli tests, the passage time
    inside it is drawn exactly, and the grid points after the passage are
    reached by skipping through the continuous path (see ``limits``).
``hit_forward_batch``
    General nondecreasing barrier on a finite horizon, full Euler grid,
    optionally refined ``2**depth`` times. The barrier is taken as linear on
    each fine interval, which makes the crossing tests and passage times
    exact for that piecewise-linear proxy.
``min_batch``
    Minimum over ``[0, K h]`` or over ``[0, inf)`` (positive drift). The path
    is sampled on coarse blocks of ``block`` grid steps. Only blocks whose
    bridge dips below the coarse minimum can hold either the grid minimum or
    the continuous one; for those, the first passage below the coarse minimum
    is drawn exactly and the remaining grid points are filled in as a bridge.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .limits import _next_lattice
from .paths import (BarrierSpec, bridge_argmin_time_sample, bridge_hit_time_sample,
                    bridge_min_from_uniform)
from .rng import InvalidParameter, Stream

CHUNK_CELLS = 4_000_000


@dataclass
class HitBatch:
    tau: np.ndarray        # continuous passage time, grid units
    time_err: np.ndarray   # k_hit - tau, grid units
    pos_gap: np.ndarray    # B(k_hit h) - b(tau), space units
    frac: np.ndarray       # ceil(tau) - tau
    k_hit: np.ndarray
    discarded: int

    def triplets(self, h: float):
        return self.time_err, self.pos_gap / np.sqrt(h), self.frac


@dataclass
class MinBatch:
    grid_index: np.ndarray  # first grid index attaining the grid minimum
    grid_min: np.ndarray
    cont_min: np.ndarray
    cont_time: np.ndarray   # continuous argmin, grid units
    stop_index: np.ndarray  # last grid index generated
    blocks_refined: int

    def triplets(self, h: float):
        time_err = self.grid_index - self.cont_time
        pos = (self.grid_min - self.cont_min) / np.sqrt(h)
        frac = np.ceil(self.cont_time) - self.cont_time
        return time_err, pos, frac


def geometric_mesh(max_index: float = 1e15, growth: float = 0.25) -> np.ndarray:
    idx = [0.0]
    while idx[-1] < max_index:
        idx.append(idx[-1] + max(1.0, np.floor(growth * idx[-1])))
    return np.array(idx)


# -- barrier hitting ---------------------------------------------------------

def hit_const_batch(size: int, level: float, mu: float, sigma: float, h: float,
                    s: Stream, max_index: float = 1e15) -> HitBatch:
    if not level > 0:
        raise InvalidParameter("level must be > 0")
    if mu < 0:
        raise InvalidParameter("mu must be >= 0 so that the barrier is hit almost surely")
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    mesh = geometric_mesh(max_index)
    lens = np.diff(mesh)
    dts = lens * h
    rows = max(1, CHUNK_CELLS // lens.size)
    out = [], [], [], [], []
    discarded = 0
    for start in range(0, size, rows):
        r = min(rows, size - start)
        inc = mu * dts + sigma * np.sqrt(dts) * s.normal((r, lens.size))
        x = np.concatenate((np.zeros((r, 1)), np.cumsum(inc, axis=1)), axis=1)
        xl, xr = x[:, :-1], x[:, 1:]
        with np.errstate(over="ignore"):
            p = np.exp(-2.0 * (level - xl) * (level - xr) / (sigma * sigma * dts))
        p = np.where(xr >= level, 1.0, p)
        crossed = s.uniform(p.shape) < p
        found = crossed.any(axis=1)
        discarded += int(r - found.sum())
        j = np.argmax(crossed[found], axis=1)
        rid = np.flatnonzero(found)
        x0, x1, dt = xl[rid, j], xr[rid, j], dts[j]
        theta = bridge_hit_time_sample(x0, x1, dt, level, sigma, s) / h
        tau = mesh[j] + theta
        # distance from the passage to the next grid point
        nxt = np.ceil(theta)
        d0 = nxt - theta
        far = tau > 2.0**50
        if np.any(far):
            d0 = np.where(far, s.uniform(d0.shape), d0)
        y = mu * d0 * h + sigma * np.sqrt(d0 * h) * s.normal(d0.size)
        extra = np.zeros(d0.size)
        active = np.flatnonzero(y < 0)
        while active.size:
            gap = -y[active]
            if mu > 0:
                ret = s.inverse_gaussian(gap / mu, (gap / sigma) ** 2, gap.shape)
            else:
                ret = s.levy((gap / sigma) ** 2, gap.shape)
            steps, d = _next_lattice(ret / h, s)
            extra[active] += steps
            y[active] = mu * d * h + sigma * np.sqrt(d * h) * s.normal(active.size)
            active = active[y[active] < 0]
        out[0].append(tau)
        out[1].append(d0 + extra)
        out[2].append(y)
        out[3].append(d0)
        out[4].append(mesh[j] + nxt + extra)
    cat = [np.concatenate(o) if o else np.empty(0) for o in out]
    return HitBatch(cat[0], cat[1], cat[2], cat[3], cat[4], discarded)


def hit_forward_batch(size: int, barrier: BarrierSpec, mu: float, sigma: float, n: int,
                      horizon: float, s: Stream, depth: int = 0) -> HitBatch:
    """Euler grid on ``[0, horizon]`` with a piecewise-linear barrier proxy."""
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    k_grid = int(round(n * horizon))
    if k_grid < 1:
        raise InvalidParameter("n * horizon must be >= 1")
    sub = 2**depth
    m = k_grid * sub
    dt = 1.0 / (n * sub)
    t = np.arange(m + 1) * dt
    bvals = np.asarray(barrier(t), dtype=float)
    barrier.check(t)
    bl, br = bvals[:-1], bvals[1:]
    grid_cols = np.arange(0, m + 1, sub)
    rows = max(1, CHUNK_CELLS // m)
    out = [], [], [], [], []
    discarded = 0
    for start in range(0, size, rows):
        r = min(rows, size - start)
        inc = mu * dt + sigma * np.sqrt(dt) * s.normal((r, m))
        x = np.concatenate((np.zeros((r, 1)), np.cumsum(inc, axis=1)), axis=1)
        xl, xr = x[:, :-1], x[:, 1:]
        with np.errstate(over="ignore"):
            p = np.exp(-2.0 * (bl - xl) * (br - xr) / (sigma * sigma * dt))
        p = np.where((xl >= bl) | (xr >= br), 1.0, p)
        crossed = s.uniform(p.shape) < p
        xg = x[:, grid_cols]
        grid_hit = xg >= bvals[grid_cols]
        ok = crossed.any(axis=1) & grid_hit.any(axis=1)
        discarded += int(r - ok.sum())
        rid = np.flatnonzero(ok)
        j = np.argmax(crossed[rid], axis=1)
        theta = bridge_hit_time_sample(xl[rid, j] - bl[j], xr[rid, j] - br[j], dt, 0.0, sigma, s)
        tau = (j + theta / dt) / sub  # grid units
        k = np.argmax(grid_hit[rid], axis=1)
        b_tau = np.asarray(barrier(tau / n), dtype=float)
        frac = np.ceil(tau) - tau
        out[0].append(tau)
        out[1].append(k - tau)
        out[2].append(xg[rid, k] - b_tau)
        out[3].append(frac)
        out[4].append(k.astype(float))
    cat = [np.concatenate(o) if o else np.empty(0) for o in out]
    return HitBatch(cat[0], cat[1], cat[2], cat[3], cat[4], discarded)


# -- minima --------------------------------------------------------------------

def _coarse_finite(r, n_steps, block, mu, sigma, h, s):
    cidx = np.append(np.arange(0, n_steps, block), n_steps).astype(float)
    dts = np.diff(cidx) * h
    inc = mu * dts + sigma * np.sqrt(dts) * s.normal((r, dts.size))
    x = np.concatenate((np.zeros((r, 1)), np.cumsum(inc, axis=1)), axis=1)
    stop = np.full(r, dts.size)
    return cidx, x, stop


def _coarse_global(r, block, mu, sigma, h, gap, s, grow=64):
    dt = block * h
    chunks = [np.zeros((r, 1))]
    stop = np.full(r, -1)
    run_min = np.zeros(r)
    last = np.zeros(r)
    base = 1
    while True:
        live = np.flatnonzero(stop < 0)
        if live.size == 0:
            break
        # finished rows are padded; their columns past ``stop`` are never read
        new = np.zeros((r, grow))
        inc = mu * dt + sigma * np.sqrt(dt) * s.normal((live.size, grow))
        new[live] = last[live, None] + np.cumsum(inc, axis=1)
        cm = np.minimum(run_min[live, None], np.minimum.accumulate(new[live], axis=1))
        hit = new[live] - cm >= gap
        any_hit = hit.any(axis=1)
        stop[live[any_hit]] = base + np.argmax(hit[any_hit], axis=1)
        run_min[live] = cm[:, -1]
        last[live] = new[live, -1]
        chunks.append(new)
        base += grow
        grow *= 2
    x = np.concatenate(chunks, axis=1)[:, : stop.max() + 1]
    cidx = np.arange(x.shape[1], dtype=float) * block
    return cidx, x, stop


def min_batch(size: int, h: float, mu: float, sigma: float, s: Stream,
              n_steps: Optional[int] = None, eps: Optional[float] = None,
              block: Optional[int] = None) -> MinBatch:
    """Grid and continuous minima over ``[0, n_steps h]``, or over ``[0, inf)``
    when ``n_steps`` is None (then ``mu > 0`` and the truncation level ``eps`` apply)."""
    if not sigma > 0:
        raise InvalidParameter("sigma must be > 0")
    if n_steps is None:
        if not mu > 0:
            raise InvalidParameter("the global minimum needs mu > 0")
        if eps is None or not 0 < eps < 1:
            raise InvalidParameter("eps must lie in (0, 1)")
        gap = sigma * sigma / (2.0 * mu) * np.log(1.0 / eps)
    elif n_steps < 1:
        raise InvalidParameter("n_steps must be >= 1")
    if block is None:
        block = 64 if n_steps is not None else 128
    block = max(1, min(block, n_steps or block))
    per_row = (n_steps or 64 * block) // block + 8 * block
    rows = max(1, CHUNK_CELLS // (4 * per_row))
    parts = []
    refined = 0
    for start in range(0, size, rows):
        r = min(rows, size - start)
        if n_steps is None:
            cidx, x, stop = _coarse_global(r, block, mu, sigma, h, gap, s)
        else:
            cidx, x, stop = _coarse_finite(r, n_steps, block, mu, sigma, h, s)
        res, nref = _refine_minima(cidx, x, stop, block, sigma, h, s)
        refined += nref
        parts.append(res)
    cat = [np.concatenate([p[i] for p in parts]) for i in range(5)]
    return MinBatch(cat[0].astype(np.int64), cat[1], cat[2], cat[3], cat[4], refined)


def _refine_minima(cidx, x, stop, block, sigma, h, s):
    r, ncols = x.shape
    col = np.arange(ncols)
    valid_pt = col[None, :] <= stop[:, None]
    xv = np.where(valid_pt, x, np.inf)
    i0 = np.argmin(xv, axis=1)
    g0 = xv[np.arange(r), i0]

    lens = np.diff(cidx)
    dts = lens * h
    xl, xr = x[:, :-1], x[:, 1:]
    valid_iv = col[None, :-1] < stop[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        p = np.exp(-2.0 * (xl - g0[:, None]) * (xr - g0[:, None]) / (sigma * sigma * dts))
    p = np.where(valid_iv, p, 0.0)
    live = p > 0
    v = np.ones(p.shape)
    v[live] = s.uniform(int(live.sum()))
    keep = (v < p) & valid_iv
    row, iv = np.nonzero(keep)
    ns = row.size

    g = g0[row]
    a_l, a_r = xl[row, iv], xr[row, iv]
    dt = dts[iv]
    ln = lens[iv].astype(int)
    theta = bridge_hit_time_sample(a_l, a_r, dt, g, sigma, s)

    # grid points 1..block-1 inside each kept interval, then the right endpoint
    f = np.arange(1, block + 1, dtype=float)
    s_end = dt - theta
    sf = np.clip(f[None, :] * h - theta[:, None], 0.0, s_end[:, None])
    sf[:, -1] = s_end
    ds = np.diff(np.concatenate((np.zeros((ns, 1)), sf), axis=1), axis=1)
    w = np.cumsum(np.sqrt(ds) * s.normal((ns, block)), axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(s_end[:, None] > 0, sf / s_end[:, None], 1.0)
    vals = g[:, None] + w - ratio * (w[:, -1:] - (a_r - g)[:, None])
    vals[:, -1] = a_r

    left = np.concatenate((g[:, None], vals[:, :-1]), axis=1)
    seg_min = np.where(ds > 0,
                       bridge_min_from_uniform(left, vals, np.where(ds > 0, ds, 1.0), sigma,
                                               s.uniform((ns, block))),
                       np.inf)
    seg_min = np.minimum(seg_min, np.minimum(left, vals))

    # grid candidates: interior grid points strictly after the passage
    fi = np.arange(1, block + 1)
    is_grid = (fi[None, :] < ln[:, None]) & (fi[None, :] * h > theta[:, None])
    grid_vals = np.where(is_grid, vals, np.inf)
    gj = np.argmin(grid_vals, axis=1)
    gv = grid_vals[np.arange(ns), gj]
    gidx = cidx[iv] + fi[gj]

    sj = np.argmin(seg_min, axis=1)
    sm = seg_min[np.arange(ns), sj]

    # per-row reductions (rows appear in sorted order)
    order = np.lexsort((sm, row))
    first = np.unique(row[order], return_index=True)[1]
    best = order[first]
    rows_with = row[best]
    cont_min = np.full(r, np.nan)
    cont_time = np.full(r, np.nan)
    b = best
    bj = sj[b]
    t_left = theta[b] + np.where(bj > 0, sf[b, bj - 1], 0.0)
    xa = left[b, bj]
    xb = vals[b, bj]
    tt = bridge_argmin_time_sample(xa, xb, ds[b, bj], sm[b], sigma, s)
    cont_min[rows_with] = sm[b]
    cont_time[rows_with] = cidx[iv[b]] + (t_left + tt) / h

    grid_min = g0.copy()
    grid_index = cidx[i0].copy()
    order = np.lexsort((gidx, gv, row))
    first = np.unique(row[order], return_index=True)[1]
    bg = order[first]
    rg = row[bg]
    better = (gv[bg] < grid_min[rg]) | ((gv[bg] == grid_min[rg]) & (gidx[bg] < grid_index[rg]))
    grid_min[rg[better]] = gv[bg][better]
    grid_index[rg[better]] = gidx[bg][better]
    stop_index = cidx[stop]
    return (grid_index, grid_min, cont_min, cont_time, stop_index), ns
