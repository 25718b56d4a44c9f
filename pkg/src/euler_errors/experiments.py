"""Experiment configuration, sharded execution and report emission.

Samples are produced in fixed blocks of ``BLOCK`` paths; block ``i`` always
draws from stream ``(seed, i)``, so results do not depend on how many worker
processes share the blocks. Reference samples from the limit laws use the
stream ``(seed, REF_OFFSET + i)``.
"""
from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import batch, limits, walks
from .analysis import (beta_constant, ks_two_sample, ks_vs_uniform, summarize)
from .correction import BarrierQuery, joint_cross_terminal_prob, mc_discrete_prob
from .paths import BarrierSpec
from .rng import InvalidParameter, create_stream

BLOCK = 10_000
REF_OFFSET = 1 << 32
MAX_DISCARD_FRACTION = 1e-3
OUT_ENV = "EULER_ERRORS_OUT"

KINDS = ("hit", "min_finite", "min_infinite", "overshoot", "running_min",
         "vanishing_drift", "limit_hit", "limit_min", "correction")
SCHEMAS = {
    "triplets": ("time_err", "pos_err", "frac"),
    "pairs": ("first", "second"),
    "limits": ("time_comp", "pos_comp", "u"),
}
_SCHEMA_OF = {"hit": "triplets", "min_finite": "triplets", "min_infinite": "triplets",
              "overshoot": "pairs", "running_min": "pairs", "vanishing_drift": "pairs",
              "limit_hit": "limits", "limit_min": "limits"}
# which limit law each experiment is compared with
_REFERENCE = {"hit": "hit", "overshoot": "hit", "min_finite": "min", "min_infinite": "min",
              "running_min": "min", "vanishing_drift": "min"}


class ConfigError(InvalidParameter):
    pass


@dataclass
class ExperimentConfig:
    kind: str = "hit"
    samples: int = 10_000
    seed: int = 1
    shards: int = 1
    out: Optional[str] = None
    format: str = "json"
    n: int = 4096
    a: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    b: float = 1.0
    slope: float = 0.0
    horizon: float = 10.0
    depth: int = 0
    m: float = 50.0
    nu: float = 0.0
    eps: float = 1e-6
    y: float = 1.9
    t: float = 1.0
    # optional acceptance thresholds; unset ones are not checked
    ks_max: Optional[float] = None
    time_ks_max: Optional[float] = None
    frac_ks_max: Optional[float] = None
    mean_tol: Optional[float] = None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.samples < 1:
            raise ConfigError("samples must be >= 1")
        if self.shards < 1:
            raise ConfigError("shards must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if not self.sigma > 0:
            raise ConfigError("sigma must be > 0")
        if not 0 < self.eps < 1:
            raise ConfigError("eps must lie in (0, 1)")
        k = self.kind
        if k in ("hit", "min_finite", "min_infinite", "running_min") and self.n < 1:
            raise ConfigError("n must be >= 1")
        if k == "hit":
            if not self.b > 0 or self.slope < 0:
                raise ConfigError("hit needs b > 0 and slope >= 0")
            if self.slope == 0 and self.mu < 0:
                raise ConfigError("constant-barrier hit needs mu >= 0 (hit almost surely)")
            if self.depth < 0:
                raise ConfigError("depth must be >= 0")
        if k == "min_finite":
            na = self.n * self.a
            if not self.a > 0 or abs(na - round(na)) > 1e-9:
                raise ConfigError("min_finite needs a > 0 with n*a an integer")
        if k == "min_infinite" and not self.mu > 0:
            raise ConfigError("min_infinite needs mu > 0")
        if k == "overshoot" and (not self.m > 0 or self.nu < 0):
            raise ConfigError("overshoot needs m > 0 and nu >= 0")
        if k == "vanishing_drift" and not self.nu > 0:
            raise ConfigError("vanishing_drift needs nu > 0")
        if k == "correction":
            try:
                BarrierQuery(self.b, self.y, self.t, self.n, self.mu, self.sigma)
            except InvalidParameter as e:
                raise ConfigError(str(e)) from None

    @classmethod
    def from_mapping(cls, values: Dict[str, str]) -> "ExperimentConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(types[key], raw, key)
        return cls(**kwargs)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        d.pop("shards")
        return d


def _coerce(type_name, raw, key):
    if raw is None or isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return raw
    t = str(type_name)
    try:
        if "int" in t:
            return int(raw)
        if "float" in t:
            return None if raw in ("", "none", "None") else float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {key}") from None
    return raw


def parse_config_file(path) -> Dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key] = value
    return out


@dataclass
class ExperimentReport:
    config: dict
    schema: str
    columns: Dict[str, np.ndarray] = field(repr=False)
    summaries: Dict[str, dict]
    ks: Dict[str, float]
    discarded: int
    failures: List[str]
    wall_time: float = 0.0
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        # wall time is kept out so that reports are byte-identical across runs
        return {"config": self.config, "schema": self.schema, "summaries": self.summaries,
                "ks": self.ks, "discarded": self.discarded, "failures": self.failures,
                "passed": self.passed, "beta": beta_constant(), **self.extra}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# -- sampling -------------------------------------------------------------------

def _run_block(cfg: ExperimentConfig, index: int, count: int):
    s = create_stream(cfg.seed, index)
    k = cfg.kind
    h = 1.0 / cfg.n
    if k == "hit":
        if cfg.slope == 0:
            hb = batch.hit_const_batch(count, cfg.b, cfg.mu, cfg.sigma, h, s)
        else:
            barrier = BarrierSpec.linear(cfg.b, cfg.slope)
            hb = batch.hit_forward_batch(count, barrier, cfg.mu, cfg.sigma, cfg.n,
                                         cfg.horizon, s, cfg.depth)
        return list(hb.triplets(h)), hb.discarded
    if k == "min_finite":
        mb = batch.min_batch(count, h, cfg.mu, cfg.sigma, s, n_steps=int(round(cfg.n * cfg.a)))
        return list(mb.triplets(h)), 0
    if k == "min_infinite":
        mb = batch.min_batch(count, h, cfg.mu, cfg.sigma, s, eps=cfg.eps)
        return list(mb.triplets(h)), 0
    if k == "overshoot":
        t, p, d = walks.overshoot_batch(count, cfg.m, cfg.sigma, cfg.nu, s)
        return [t, p], d
    if k == "running_min":
        return list(walks.running_min_batch(count, cfg.n, cfg.sigma, s)), 0
    if k == "vanishing_drift":
        return list(walks.vanishing_drift_batch(count, cfg.nu, cfg.sigma, cfg.eps, s)), 0
    if k == "limit_hit":
        return list(limits.hit_limit_batch(count, cfg.sigma, s)), 0
    if k == "limit_min":
        return list(limits.min_limit_batch(count, cfg.sigma, s, cfg.eps)), 0
    raise ConfigError(f"kind {k!r} has no sampler")


def _run_reference(cfg: ExperimentConfig, index: int, count: int):
    s = create_stream(cfg.seed, REF_OFFSET + index)
    if _REFERENCE[cfg.kind] == "hit":
        return limits.hit_limit_batch(count, cfg.sigma, s)
    return limits.min_limit_batch(count, cfg.sigma, s, cfg.eps)


def _blocks(total: int):
    return [(i, min(BLOCK, total - i * BLOCK)) for i in range((total + BLOCK - 1) // BLOCK)]


def _job(args):
    cfg, ref, index, count = args
    return _run_reference(cfg, index, count) if ref else _run_block(cfg, index, count)


def _map(cfg: ExperimentConfig, jobs):
    if cfg.shards == 1 or len(jobs) == 1:
        return [_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=cfg.shards) as pool:
        return list(pool.map(_job, jobs))


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    cfg.validate()
    start = time.perf_counter()
    if cfg.kind == "correction":
        return _run_correction(cfg, start)
    blocks = _blocks(cfg.samples)
    results = _map(cfg, [(cfg, False, i, c) for i, c in blocks])
    schema = _SCHEMA_OF[cfg.kind]
    names = SCHEMAS[schema]
    columns = {name: np.concatenate([r[0][j] for r in results]) for j, name in enumerate(names)}
    discarded = sum(r[1] for r in results)

    heavy = {"time_err", "first", "time_comp"}
    summaries = {name: summarize(col, heavy_tailed=name in heavy).to_dict()
                 for name, col in columns.items()}
    ks: Dict[str, float] = {}
    if cfg.kind in _REFERENCE:
        refs = _map(cfg, [(cfg, True, i, c) for i, c in blocks])
        ref_time = np.concatenate([r[0] for r in refs])
        ref_pos = np.concatenate([r[1] for r in refs])
        time_col, pos_col = names[0], names[1]
        ks[pos_col] = ks_two_sample(columns[pos_col], ref_pos)
        ks[time_col] = ks_two_sample(columns[time_col], ref_time)
        summaries[pos_col]["ks"] = ks[pos_col]
        summaries[time_col]["ks"] = ks[time_col]
    if "frac" in columns:
        ks["frac"] = ks_vs_uniform(columns["frac"])
        summaries["frac"]["ks"] = ks["frac"]

    failures = []
    total = cfg.samples
    if discarded / total >= MAX_DISCARD_FRACTION:
        failures.append(f"discard fraction {discarded / total:.3g} >= {MAX_DISCARD_FRACTION}")
    pos_name = names[1]
    if cfg.ks_max is not None and pos_name in ks and ks[pos_name] >= cfg.ks_max:
        failures.append(f"ks[{pos_name}] = {ks[pos_name]:.4g} >= {cfg.ks_max}")
    if cfg.time_ks_max is not None and names[0] in ks and ks[names[0]] >= cfg.time_ks_max:
        failures.append(f"ks[{names[0]}] = {ks[names[0]]:.4g} >= {cfg.time_ks_max}")
    if cfg.frac_ks_max is not None and "frac" in ks and ks["frac"] >= cfg.frac_ks_max:
        failures.append(f"ks[frac] = {ks['frac']:.4g} >= {cfg.frac_ks_max}")
    if cfg.mean_tol is not None:
        target = cfg.sigma * beta_constant()
        mean = summaries[pos_name]["mean"]
        if abs(mean - target) >= cfg.mean_tol:
            failures.append(f"mean[{pos_name}] = {mean:.5g} not within {cfg.mean_tol} of {target:.5g}")
    return ExperimentReport(cfg.echo(), schema, columns, summaries, ks, discarded, failures,
                            time.perf_counter() - start)


def _run_correction(cfg: ExperimentConfig, start: float) -> ExperimentReport:
    q = BarrierQuery(cfg.b, cfg.y, cfg.t, cfg.n, cfg.mu, cfg.sigma)
    est, se = mc_discrete_prob(q, cfg.samples, create_stream(cfg.seed, 0))
    extra = {"uncorrected": joint_cross_terminal_prob(q, True),
             "corrected": joint_cross_terminal_prob(q, False),
             "mc_estimate": est, "mc_se": se}
    failures = []
    if cfg.mean_tol is not None and abs(est - extra["corrected"]) >= cfg.mean_tol:
        failures.append(f"|mc - corrected| = {abs(est - extra['corrected']):.3g} >= {cfg.mean_tol}")
    return ExperimentReport(cfg.echo(), "correction", {}, {}, {}, 0, failures,
                            time.perf_counter() - start, extra)


# -- output ---------------------------------------------------------------------

def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "euler_errors_out"))


def emit(report: ExperimentReport, fmt: str, out_dir) -> List[Path]:
    """Write ``summary.json`` (and ``samples.csv`` for ``fmt == 'csv'``) into ``out_dir``."""
    out = Path(out_dir)
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        summary = out / "summary.json"
        summary.write_text(report.to_json() + "\n")
        written.append(summary)
        if fmt == "csv" and report.columns:
            path = out / "samples.csv"
            names = list(report.columns)
            data = np.column_stack([report.columns[c] for c in names])
            np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")
            written.append(path)
    except OSError as e:
        raise OSError(f"cannot write report to {out}: {e}") from e
    return written
