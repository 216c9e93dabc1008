"""Command-line entry point.

Subcommands:
  run       one trial with a full JSONL trace (and optional series CSV)
  batch     N trials, summary CSV + per-trial times CSV + manifest
  suite     all scenario families with PASS/FAIL trend checks
  validate  scenario config schema check

Exit codes: 0 success, 1 trend-check failure, 2 config/usage error.
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from typing import Optional

from . import __version__, fileio
from .experiments import ScenarioConfig, build_scenario, run_batch, world_from_config
from .fileio import ConfigError, RunManifest
from .world import Running, Success, is_terminated, step


def _default_threads() -> int:
    env = os.environ.get("GRF_SWARM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="scenario config JSON (overrides --scenario)")
    p.add_argument(
        "--scenario",
        default="scalability",
        choices=[
            "scalability", "ideal", "failure", "goal-change",
            "robustness", "waypoints", "cohesion",
        ],
    )
    p.add_argument("--robots", type=int, help="swarm size (scenario default otherwise)")
    p.add_argument("--shape", choices=["rect", "octagon", "triangle"],
                   help="robustness object shape")
    p.add_argument("--scale", type=float, help="robustness object scale (1.0 or 2.0)")
    p.add_argument("--mass", type=float, help="object mass in kg")
    p.add_argument("--tick-limit", type=int, help="override the tick limit")
    p.add_argument("--threads", type=int, default=_default_threads())


def _resolve_config(args) -> ScenarioConfig:
    if args.config:
        config = fileio.load_config(args.config)
    else:
        kind = args.scenario.replace("-", "_")
        kwargs = {}
        if args.robots is not None:
            kwargs["robots"] = args.robots
        if kind == "robustness":
            if args.shape is not None:
                kwargs["shape"] = args.shape
            if args.scale is not None:
                kwargs["scale"] = args.scale
            if args.mass is not None:
                kwargs["mass"] = args.mass
        config = build_scenario(kind, **kwargs)
    if args.tick_limit is not None:
        config = fileio.config_from_dict(
            {**fileio.config_to_dict(config), "tick_limit": args.tick_limit}
        )
    return config


def cmd_run(args) -> int:
    config = _resolve_config(args)
    seed = args.seed
    world = world_from_config(config, seed)
    buf = io.StringIO()
    while True:
        buf.write(fileio.trace_record(world))
        buf.write("\n")
        status = is_terminated(world, config.sensor)
        if not isinstance(status, Running):
            break
        step(world, config.energy, config.sampler, config.sensor,
             physics=config.physics, threads=args.threads)
    if args.trace:
        fileio.atomic_write_text(args.trace, buf.getvalue())
    outcome = "success" if isinstance(is_terminated(world, config.sensor), Success) else "timeout"
    print(f"{config.name} seed={seed}: {outcome} at t={world.tick * config.dt:.1f}s "
          f"({world.tick} ticks)")
    if args.series:
        import json

        rows = [json.loads(line) for line in buf.getvalue().splitlines()]
        lines = ["tick,time_s,dist_to_goal_m,object_speed_mps"]
        for row in rows:
            if row["dist_to_goal"] is None:
                continue
            lines.append(
                f'{row["tick"]},{row["tick"] * config.dt:.9g},'
                f'{row["dist_to_goal"]:.9g},{row["object_speed"]:.9g}'
            )
        fileio.atomic_write_text(args.series, "\n".join(lines) + "\n")
    return 0


def cmd_batch(args) -> int:
    config = _resolve_config(args)
    seeds = [args.seed + i for i in range(args.trials)]
    os.makedirs(args.out, exist_ok=True)
    manifest = RunManifest(
        config_path=args.config,
        config_sha256=fileio.config_hash(config),
        seeds=tuple(seeds),
        output_dir=args.out,
    )
    fileio.write_manifest(manifest, os.path.join(args.out, "manifest.json"))
    fileio.save_config(config, os.path.join(args.out, "config.json"))
    results, summary = run_batch(config, seeds, threads=args.threads)
    fileio.atomic_write_text(
        os.path.join(args.out, "summary.csv"), fileio.summary_csv(config, summary)
    )
    fileio.atomic_write_text(
        os.path.join(args.out, "trials.csv"), fileio.trials_csv(results)
    )
    print(f"{config.name}: n={summary.n} success_rate={summary.success_rate:.2f} "
          f"mean={summary.mean_time_s:.1f}s ci95={summary.ci95_halfwidth_s:.1f}s")
    print(f"wrote {args.out}/summary.csv, trials.csv, manifest.json")
    return 0


def cmd_suite(args) -> int:
    from . import suite

    checks = suite.run_suite(trials=args.trials, threads=args.threads,
                             verbose=True)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        lines = [f"{'PASS' if c.passed else 'FAIL'},{c.name},{c.detail}" for c in checks]
        fileio.atomic_write_text(os.path.join(args.out, "suite.csv"),
                                 "status,check,detail\n" + "\n".join(lines) + "\n")
    return 1 if failed else 0


def cmd_validate(args) -> int:
    try:
        config = fileio.load_config(args.path)
    except ConfigError as err:
        print(f"invalid config: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"cannot read config: {err}", file=sys.stderr)
        return 2
    print(f"ok: {config.name} ({config.robot_count} robots)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grf-swarm",
        description="Deterministic 2D swarm simulator: flocking, obstacle "
                    "avoidance, and cooperative object transport.",
    )
    parser.add_argument("--version", action="version", version=f"grf-swarm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one trial and write a JSONL trace")
    _add_scenario_flags(p_run)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--trace", help="JSONL trace output path")
    p_run.add_argument("--series", help="distance/speed CSV output path")
    p_run.set_defaults(fn=cmd_run)

    p_batch = sub.add_parser("batch", help="run N trials and write summary CSVs")
    _add_scenario_flags(p_batch)
    p_batch.add_argument("--seed", type=int, default=0, help="first seed; trials use seed..seed+N-1")
    p_batch.add_argument("--trials", type=int, default=30)
    p_batch.add_argument("--out", required=True, help="output directory")
    p_batch.set_defaults(fn=cmd_batch)

    p_suite = sub.add_parser("suite", help="run scenario families and trend checks")
    p_suite.add_argument("--trials", type=int, default=30)
    p_suite.add_argument("--threads", type=int, default=_default_threads())
    p_suite.add_argument("--out", help="optional output directory for suite.csv")
    p_suite.set_defaults(fn=cmd_suite)

    p_val = sub.add_parser("validate", help="check a scenario config file")
    p_val.add_argument("path")
    p_val.set_defaults(fn=cmd_validate)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
