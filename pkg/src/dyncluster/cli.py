"""Command-line interface.

Subcommands: ``generate``, ``run``, ``inspect``, ``export-density`` and
``presets``. Scenarios come from a TOML file (``--config``) or a named
preset (``--preset``).
"""
from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from pathlib import Path

from . import artifacts
from .config import PRESETS, load_config, preset, serialize_config, with_overrides
from .density import emit_density_grid
from .engine import Engine, wants_snapshot
from .errors import ConfigurationError, UnsupportedExport
from .evaluation import (
    DynamicClusteringProblem,
    baseline_optimize,
    deployment_intervals,
    offline_performance,
)


def _scenario_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="scenario TOML file")
    src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    p.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
    p.add_argument("--ticks", type=int, help="number of ticks (overrides run.ticks)")


def _output_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--snapshot-every", type=int,
                   help="write a dataset snapshot every N ticks; 0 = on every full resample")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyncluster",
        description="Generate dynamic clustering datasets and score optimizers on them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run the generator only and export datasets and events")
    _scenario_args(p)
    _output_args(p)

    p = sub.add_parser("run", help="run the generator with an optimizer and report metrics")
    _scenario_args(p)
    _output_args(p)
    p.add_argument("--algorithm", choices=["baseline"], default="baseline")
    p.add_argument("--budget", type=int, help="objective evaluations (default: --ticks)")
    p.add_argument("--root-threshold", type=float, required=True,
                   help="objective value above which a deployed solution is replaced")

    p = sub.add_parser("inspect", help="summarize an event log")
    p.add_argument("log", type=Path)

    p = sub.add_parser("export-density", help="grid-evaluated mixture density as CSV (d = 2 only)")
    _scenario_args(p)
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--out", type=Path, default=Path("density.csv"), help="output CSV file")

    sub.add_parser("presets", help="list built-in scenarios")
    return parser


def _load(args):
    cfg = preset(args.preset) if args.preset else load_config(args.config)
    return with_overrides(cfg, seed=args.seed, ticks=args.ticks,
                          snapshot_every=getattr(args, "snapshot_every", None))


def _prepare_out(out: Path, cfg) -> Path:
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(serialize_config(cfg), encoding="utf-8")
    return out / "snapshots"


def cmd_generate(args) -> dict:
    cfg = _load(args)
    snaps = _prepare_out(args.out, cfg)
    engine = Engine(cfg)
    counts: Counter = Counter()
    every = cfg.run.snapshot_every
    with artifacts.EventLogWriter(args.out / "events.jsonl", cfg, engine.seed) as log:
        artifacts.write_snapshot_csv(snaps / artifacts.snapshot_name(0), engine.window)
        written = 1
        while not engine.done:
            events = engine.advance()
            log.write(events)
            counts.update(e.kind for e in events)
            if wants_snapshot(engine.tick, events, every, engine.done):
                artifacts.write_snapshot_csv(snaps / artifacts.snapshot_name(engine.tick), engine.window)
                written += 1
    return {"ticks": engine.tick, "events": dict(sorted(counts.items())), "snapshots": written,
            "out": str(args.out)}


def cmd_run(args) -> dict:
    cfg = _load(args)
    budget = args.budget if args.budget is not None else cfg.run.ticks
    if budget < 1:
        raise ConfigurationError("--budget must be >= 1")
    cfg = with_overrides(cfg, ticks=budget)
    snaps = _prepare_out(args.out, cfg)
    engine = Engine(cfg)
    problem = DynamicClusteringProblem(engine, budget, root_threshold=args.root_threshold)
    artifacts.write_snapshot_csv(snaps / artifacts.snapshot_name(0), engine.window)
    records = baseline_optimize(problem, budget, engine.streams["optimizer"])
    with artifacts.EventLogWriter(args.out / "events.jsonl", cfg, engine.seed) as log:
        log.write(problem.events)
    artifacts.write_snapshot_csv(snaps / artifacts.snapshot_name(engine.tick), engine.window)
    artifacts.write_best_csv(args.out / "best.csv", records)
    intervals = deployment_intervals(records, args.root_threshold)
    report = {
        "scenario": cfg.name,
        "seed": engine.seed,
        "prng": artifacts.PRNG_ID,
        "config_hash": artifacts.config_hash(cfg),
        "algorithm": args.algorithm,
        "budget": budget,
        "evaluations": len(records),
        "offline_performance": offline_performance(records),
        "root_threshold": args.root_threshold,
        "root_survival": sum(intervals) / len(intervals),
        "deployments": len(intervals),
        "final_best": records[-1].best,
        "event_counts": dict(sorted(Counter(e.kind for e in problem.events).items())),
        "final_state": {"tick": engine.tick, "d": engine.state.d, "m": engine.state.m,
                        "kappa": engine.state.kappa},
    }
    artifacts.write_json(args.out / "report.json", report)
    return report


def cmd_inspect(args) -> dict:
    return artifacts.summarize_event_log(args.log)


def cmd_export_density(args) -> dict:
    cfg = _load(args)
    engine = Engine(cfg)
    while not engine.done:
        engine.advance()
    grid = emit_density_grid(engine.state, args.resolution)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    artifacts.write_density_csv(args.out, grid)
    return {"tick": engine.tick, "cells": grid.density.size, "out": str(args.out)}


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "inspect": cmd_inspect,
    "export-density": cmd_export_density,
    "presets": lambda args: {"presets": sorted(PRESETS)},
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
    except (ConfigurationError, UnsupportedExport) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
