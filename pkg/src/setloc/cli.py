"""Command-line entry point: run, sweep, validate, dump-defaults."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import scenario
from .scenario import ConfigError, ScenarioFault

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAULT = 2

log = logging.getLogger("setloc")


def _setup_logging() -> None:
    level = os.environ.get("SETLOC_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _load(args) -> scenario.ScenarioConfig:
    cfg = scenario.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "estimator", None):
        from dataclasses import replace
        name = {"set": "set", "fastslam": "fastslam", "both": "both"}[args.estimator]
        cfg = replace(cfg, estimators=name)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    problems = scenario.validate_config(cfg)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rec = scenario.simulate_run(cfg, steps=args.steps,
                                    fallback_predict=args.fallback_predict,
                                    record_geometry=True)
    except ScenarioFault as exc:
        print(f"estimation fault: {exc}", file=sys.stderr)
        return EXIT_FAULT
    (out / "metrics.csv").write_text(rec.to_csv(include_timings=args.timings),
                                     encoding="utf-8")
    (out / "geometry.ndjson").write_text("\n".join(rec.geometry) + "\n",
                                         encoding="utf-8")
    m1 = rec.set_m1() or rec.fs_m1()
    rate = rec.containment_rate()
    mean_m1 = float(np.mean(m1)) if m1 else float("nan")
    rate_txt = f"{100.0 * rate:.1f}%" if rate == rate else "n/a"
    print(f"steps={len(rec.rows)} mean_m1={mean_m1:.4f} "
          f"containment_rate={rate_txt} fallbacks={rec.set_fallbacks}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    problems = scenario.validate_config(cfg)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        values = [float(v) for v in args.values.split(",") if v]
    except ValueError:
        print(f"config error: bad sweep values {args.values!r}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = scenario.sensitivity_sweep(cfg, args.parameter, values,
                                          args.seeds, steps=args.steps,
                                          jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    (out / "sweep.csv").write_text(scenario.sweep_to_csv(rows), encoding="utf-8")
    print(f"wrote {len(rows)} sweep rows to {out / 'sweep.csv'}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = _load(args)
    problems = scenario.validate_config(cfg)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"ok: {cfg.mode} scenario, {cfg.n_sensors} sensors, "
          f"{cfg.n_markers} markers, {len(cfg.trajectory)} steps")
    return EXIT_OK


def _cmd_dump_defaults(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("parking", "omni"):
        path = out / f"{name}.cfg"
        path.write_text(scenario.builtin_config_text(name), encoding="utf-8")
        print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="setloc",
                                 description="guaranteed set-membership "
                                             "localization runner")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate one scenario")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--steps", type=int, default=None)
    run.add_argument("--estimator", choices=["set", "fastslam", "both"])
    run.add_argument("--fallback-predict", action="store_true",
                     help="keep the predicted sets instead of aborting on an "
                          "empty intersection")
    run.add_argument("--timings", action="store_true",
                     help="write measured wall times into metrics.csv "
                          "(breaks byte-for-byte reproducibility)")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="sensitivity sweep over one parameter")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--parameter", required=True,
                       choices=list(scenario.SWEEP_PARAMETERS))
    sweep.add_argument("--values", required=True,
                       help="comma-separated parameter values")
    sweep.add_argument("--seeds", type=int, default=5)
    sweep.add_argument("--steps", type=int, default=None)
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--estimator", choices=["set", "fastslam", "both"])
    sweep.add_argument("--jobs", type=int, default=1)
    sweep.set_defaults(func=_cmd_sweep)

    val = sub.add_parser("validate", help="check a config without running")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)

    dump = sub.add_parser("dump-defaults",
                          help="write the bundled scenario configs")
    dump.add_argument("--out", required=True)
    dump.set_defaults(func=_cmd_dump_defaults)
    return ap


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
