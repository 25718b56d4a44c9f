"""Acceptance suite: each check reproduces one convergence statement or identity
at desk scale with a pinned seed and reports pass/fail with its statistics."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import batch, events, limits, walks
from .analysis import (beta_constant, beta_oracle, ks_two_sample, ks_vs_uniform,
                       median_rate_slope)
from .correction import BarrierQuery, joint_cross_terminal_prob, mc_discrete_prob
from .paths import (BarrierSpec, bridge_min_sample, reflect, sample_bessel3_at,
                    sample_bm_grid, sample_two_sided_bessel3)
from .rng import create_stream

SEED = 20240607


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: Dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        info = ", ".join(f"{k}={_fmt(v)}" for k, v in self.details.items())
        return f"[{status}] {self.number:2d} {self.name}: {info} ({self.seconds:.1f}s)"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6g}"


def _s(tag: int):
    return create_stream(SEED, tag)


def c01_beta():
    beta_constant.cache_clear()
    t0 = time.perf_counter()
    b = beta_constant()
    dt = time.perf_counter() - t0
    oracle = beta_oracle()
    err = abs(b - oracle)
    ref_err = abs(b - 0.582597157939)
    ok = err < 1e-10 and ref_err < 1e-10 and dt < 1.0
    return ok, {"beta": b, "oracle_diff": err, "ref_diff": ref_err, "runtime_s": dt}


def c02_hit_limit_mean():
    _, pos, _ = limits.hit_limit_batch(10**6, 1.0, _s(2))
    d = abs(pos.mean() - beta_constant())
    return d < 0.005, {"mean": pos.mean(), "abs_diff": d}


def c03_min_limit_mean():
    _, pos, _ = limits.min_limit_batch(10**6, 1.0, _s(3), eps=1e-6)
    d = abs(pos.mean() - beta_constant())
    return d < 0.005, {"mean": pos.mean(), "abs_diff": d}


def c04_min_finite():
    n, N = 2**12, 10**5
    mb = batch.min_batch(N, 1.0 / n, 0.0, 1.0, _s(4), n_steps=n)
    _, pos, frac = mb.triplets(1.0 / n)
    _, ref, _ = limits.min_limit_batch(N, 1.0, _s(40))
    ks = ks_two_sample(pos, ref)
    d = abs(pos.mean() - beta_constant())
    kf = ks_vs_uniform(frac)
    return ks < 0.02 and d < 0.02 and kf < 0.0092, {"ks_pos": ks, "mean_diff": d, "ks_frac": kf}


def c05_hit_const():
    n, N = 2**12, 10**5
    hb = batch.hit_const_batch(N, 1.0, 0.0, 1.0, 1.0 / n, _s(5))
    te, pos, _ = hb.triplets(1.0 / n)
    rt, rp, _ = limits.hit_limit_batch(N, 1.0, _s(50))
    ks_p = ks_two_sample(pos, rp)
    ks_t = ks_two_sample(te, rt)
    order = float(np.mean(hb.k_hit >= hb.tau))
    disc = hb.discarded / N
    ok = ks_p < 0.02 and ks_t < 0.03 and order == 1.0 and disc < 1e-3
    return ok, {"ks_pos": ks_p, "ks_time": ks_t, "frac_tau_n_ge_tau": order, "discard_frac": disc}


def c06_min_global():
    n, N = 2**12, 10**5
    mb = batch.min_batch(N, 1.0 / n, 1.0, 1.0, _s(6), eps=1e-6)
    _, pos, _ = mb.triplets(1.0 / n)
    _, ref, _ = limits.min_limit_batch(N, 1.0, _s(60))
    ks = ks_two_sample(pos, ref)
    return ks < 0.02, {"ks_pos": ks}


def c07_overshoot():
    N = 10**5
    _, over, d50 = walks.overshoot_batch(N, 50.0, 1.0, 0.0, _s(7))
    _, ref, _ = limits.hit_limit_batch(N, 1.0, _s(70))
    ks = ks_two_sample(over, ref)
    md = abs(over.mean() - beta_constant())
    _, over64, _ = walks.overshoot_batch(N, 64.0, 1.0, 0.0, _s(71))
    n = 64**2
    hb = batch.hit_const_batch(N, 1.0, 0.0, 1.0, 1.0 / n, _s(72))
    ks_bridge = ks_two_sample(over64, hb.triplets(1.0 / n)[1])
    ok = md < 0.02 and ks < 0.02 and ks_bridge < 0.02 and d50 / N < 1e-3
    return ok, {"mean_diff": md, "ks_pos": ks, "ks_scaling_bridge": ks_bridge}


def c08_running_min():
    N = 10**5
    _, md = walks.running_min_batch(N, 2**12, 1.0, _s(8))
    _, ref, _ = limits.min_limit_batch(N, 1.0, _s(80))
    ks = ks_two_sample(md, ref)
    return ks < 0.02, {"ks_pos": ks}


def c09_vanishing_drift():
    N = 10**5
    _, md = walks.vanishing_drift_batch(N, 2.0**-6, 1.0, 1e-6, _s(9))
    _, ref, _ = limits.min_limit_batch(N, 1.0, _s(90))
    ks = ks_two_sample(md, ref)
    return ks < 0.02, {"ks_pos": ks}


def c10_rates():
    N = 10**5
    pos_pts, time_pts = [], []
    for i, n in enumerate((2**8, 2**10, 2**12)):
        hb = batch.hit_const_batch(N, 1.0, 0.0, 1.0, 1.0 / n, _s(100 + i))
        pos_pts.append((n, float(np.median(hb.pos_gap))))
        time_pts.append((n, float(np.median(hb.time_err / n))))
    sp = median_rate_slope(pos_pts)
    st = median_rate_slope(time_pts)
    ok = -0.6 <= sp <= -0.4 and -1.15 <= st <= -0.85
    return ok, {"slope_pos": sp, "slope_time": st}


def c11_mapping_identity():
    """Direct triplets against the zoomed-process mappings on the same paths."""
    paths = 10**4
    n = 64
    s = _s(11)
    worst_grid = 0.0
    worst_cont = 0.0
    mismatched = 0
    checked = 0
    b_const = BarrierSpec.const(1.0)
    b_lin = BarrierSpec.linear(0.5, 1.0)
    for i in range(paths):
        p = sample_bm_grid(0.0, 1.0, n, 1.0, s)
        k, gmin = events.grid_argmin(p)
        t_cont, m = events.continuous_min(p, s)
        direct = events.ErrorTriplet(k - n * t_cont, np.sqrt(n) * (gmin - m),
                                     float(np.ceil(n * t_cont) - n * t_cont))
        mapped = events.min_triplet_via_mapping(p, n, t_cont, m)
        worst_grid = max(worst_grid, abs(direct.pos_err - mapped.pos_err))
        worst_cont = max(worst_cont, abs(direct.time_err - mapped.time_err),
                         abs(direct.frac - mapped.frac))
        checked += 1
        barrier = b_const if i % 2 == 0 else b_lin
        q = sample_bm_grid(0.5, 1.0, n, 8.0, s)
        rec = events.hit_record(q, barrier, 2, s)
        if rec is events.NO_HIT:
            continue
        hd = events.ErrorTriplet(n * (rec.tau_n - rec.tau_cont),
                                 np.sqrt(n) * (rec.value_n - rec.value_cont),
                                 float(np.ceil(n * rec.tau_cont) - n * rec.tau_cont))
        hm = events.hit_triplet_via_mapping(q, barrier, n, rec.tau_cont)
        if hm is events.NO_HIT:
            mismatched += 1
            continue
        # the zoomed barrier is an exact difference, the direct one goes through b(tau);
        # both compare the same grid values
        worst_grid = max(worst_grid, abs(hd.pos_err - hm.pos_err))
        worst_cont = max(worst_cont, abs(hd.time_err - hm.time_err), abs(hd.frac - hm.frac))
        checked += 1
    tol = 1e-3
    ok = mismatched == 0 and worst_grid <= 1e-9 and worst_cont < tol
    return ok, {"checked": checked, "mismatched": mismatched, "max_grid_diff": worst_grid,
                "max_cont_diff": worst_cont}


def c12_correction():
    q = BarrierQuery(b=2.0, y=1.9, t=1.0, n=50, mu=0.0, sigma=1.0)
    est, se = mc_discrete_prob(q, 10**6, _s(12))
    corr = joint_cross_terminal_prob(q, continuous=False)
    unc = joint_cross_terminal_prob(q, continuous=True)
    dc, du = abs(est - corr), abs(est - unc)
    ok = dc < du and dc < max(0.002, 3 * se)
    return ok, {"mc": est, "se": se, "corrected": corr, "uncorrected": unc,
                "err_corrected": dc, "err_uncorrected": du}


def c13_invariants():
    paths = 10**4
    s = _s(13)
    v: Dict[str, int] = {"tau_order": 0, "min_pos": 0, "frac": 0, "reflect": 0,
                         "bridge_min": 0, "bessel": 0}
    n = 64
    barrier = BarrierSpec.linear(0.5, 0.5)
    for _ in range(paths):
        q = sample_bm_grid(0.3, 1.0, n, 8.0, s)
        rec = events.hit_record(q, barrier, 2, s)
        if rec is not events.NO_HIT:
            v["tau_order"] += rec.tau_n < rec.tau_cont
            v["frac"] += not 0 <= np.ceil(n * rec.tau_cont) - n * rec.tau_cont < 1
        tr = events.error_triplet_min(1.0, n, events.ProcessParams(0.0, 1.0), s)
        v["min_pos"] += tr.pos_err < 0
        v["frac"] += not 0 <= tr.frac < 1
        p = sample_bm_grid(-0.2, 1.0, n, 1.0, s)
        v["reflect"] += int(np.any(reflect(p).values < 0))
        mins = bridge_min_sample(p.values[:-1], p.values[1:], 1.0 / n, 1.0, s)
        v["bridge_min"] += int(np.any(mins > np.minimum(p.values[:-1], p.values[1:])))
    # the vectorised engines on the same number of paths
    hb = batch.hit_const_batch(paths, 1.0, 0.2, 1.0, 1.0 / n, s)
    v["tau_order"] += int(np.sum(hb.k_hit < hb.tau))
    v["frac"] += int(np.sum((hb.frac < 0) | (hb.frac >= 1)))
    mb = batch.min_batch(paths, 1.0 / n, 0.0, 1.0, s, n_steps=n)
    _, pos, frac = mb.triplets(1.0 / n)
    v["min_pos"] += int(np.sum(pos < 0))
    v["frac"] += int(np.sum((frac < 0) | (frac >= 1)))
    offs = np.sort(s.uniform(paths) * 100.0)
    v["bessel"] += int(np.sum(sample_bessel3_at(offs, s).values < 0))
    v["bessel"] += int(np.sum(sample_two_sided_bessel3(offs - 50.0, s).values < 0))
    total = sum(v.values())
    return total == 0, {"violations": total, **{f"v_{k}": c for k, c in v.items()}}


CRITERIA: Sequence[tuple] = (
    (1, "beta constant", c01_beta),
    (2, "hit-limit mean", c02_hit_limit_mean),
    (3, "min-limit mean", c03_min_limit_mean),
    (4, "finite-horizon minimum", c04_min_finite),
    (5, "constant-barrier hitting", c05_hit_const),
    (6, "global minimum", c06_min_global),
    (7, "walk overshoot", c07_overshoot),
    (8, "walk running minimum", c08_running_min),
    (9, "vanishing drift", c09_vanishing_drift),
    (10, "convergence rates", c10_rates),
    (11, "zoomed mapping identity", c11_mapping_identity),
    (12, "continuity correction", c12_correction),
    (13, "per-path invariants", c13_invariants),
)


def run_criterion(number: int) -> CriterionResult:
    for num, name, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            ok, details = fn()
            return CriterionResult(num, name, bool(ok), details, time.perf_counter() - t0)
    raise KeyError(f"no criterion {number}")


def run_all(only: Optional[List[int]] = None,
            callback: Optional[Callable[[CriterionResult], None]] = None) -> List[CriterionResult]:
    out = []
    for num, _, _ in CRITERIA:
        if only and num not in only:
            continue
        r = run_criterion(num)
        if callback:
            callback(r)
        out.append(r)
    return out
