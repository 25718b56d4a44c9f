"""Command-line entry point: ``euler-errors {simulate,limit,verify,correct}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import verify
from .experiments import (KINDS, ConfigError, ExperimentConfig, default_out_dir, emit,
                          parse_config_file, run_experiment)


def _add_param_flags(p: argparse.ArgumentParser, skip=()) -> None:
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in skip:
            continue
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, default=None,
                       help=f"(default {f.default})")


def _build_config(args, fixed=None) -> ExperimentConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_file(args.config))
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    values.update(fixed or {})
    return ExperimentConfig.from_mapping(values)


def _run_and_emit(cfg: ExperimentConfig) -> int:
    report = run_experiment(cfg)
    out = Path(cfg.out) if cfg.out else default_out_dir()
    for path in emit(report, cfg.format, out):
        print(f"wrote {path}", file=sys.stderr)
    print(f"wall time {report.wall_time:.2f}s", file=sys.stderr)
    print(report.to_json())
    return 0 if report.passed else 1


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    if cfg.kind.startswith("limit") or cfg.kind == "correction":
        raise ConfigError(f"use the '{'limit' if cfg.kind.startswith('limit') else 'correct'}' "
                          f"subcommand for kind {cfg.kind!r}")
    return _run_and_emit(cfg)


def cmd_limit(args) -> int:
    return _run_and_emit(_build_config(args, {"kind": "limit_" + args.which}))


def cmd_correct(args) -> int:
    fixed = {"kind": "correction"}
    if args.mc_samples is not None:
        fixed["samples"] = args.mc_samples
    cfg = _build_config(args, fixed)
    report = run_experiment(cfg)
    out = {k: report.extra[k] for k in ("uncorrected", "corrected", "mc_estimate", "mc_se")}
    print(json.dumps(out, sort_keys=True))
    if args.out:
        emit(report, "json", args.out)
    return 0 if report.passed else 1


def cmd_verify(args) -> int:
    only = [int(x) for x in args.only.split(",")] if args.only else None
    results = verify.run_all(only, callback=lambda r: print(r.line(), flush=True))
    failures = [r.number for r in results if not r.passed]
    doc = {"results": [{"number": r.number, "name": r.name, "passed": r.passed,
                        "details": {k: float(v) for k, v in r.details.items()}}
                       for r in results],
           "failures": failures}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "verify.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(json.dumps({"failures": failures}))
    return 0 if not failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="euler-errors",
                                     description="Discretisation-error experiments for Brownian paths.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an error experiment")
    sim.add_argument("--config", help="flat key = value config file; flags override it")
    _add_param_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    lim = sub.add_parser("limit", help="sample a limit law")
    lim.add_argument("which", choices=("hit", "min"))
    lim.add_argument("--config")
    _add_param_flags(lim, skip=("kind",))
    lim.set_defaults(func=cmd_limit)

    cor = sub.add_parser("correct", help="continuity-corrected barrier probability")
    cor.add_argument("--config")
    cor.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
    _add_param_flags(cor, skip=("kind",))
    cor.set_defaults(func=cmd_correct)

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--only", help="comma-separated criterion numbers")
    ver.add_argument("--out", help="directory for verify.json")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
