"""Trend checks over the scenario families.

Each check returns a CheckResult with a PASS/FAIL verdict and a detail
string; run_suite executes all of them. These are the same checks the
acceptance test module asserts, so the CLI `suite` subcommand and pytest
agree by construction.
"""

from __future__ import annotations

import io
import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import fileio
from .experiments import build_scenario, run_batch, world_from_config
from .geometry import Vec2
from .world import (
    Contact,
    PhysicsParams,
    RobotState,
    Running,
    TransportObject,
    WorldState,
    is_terminated,
    resolve_object_motion,
    step,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _fmt_mean(summary) -> str:
    return f"{summary.mean_time_s:.0f}±{summary.ci95_halfwidth_s:.0f}s (n={summary.n})"


def cohesion_check(seeds=tuple(range(10)), ticks: int = 2000, threads: int = 1) -> CheckResult:
    """Flocking consensus: by `ticks`, the swarm's mean pairwise distance
    sits between half the preferred spacing and the sensing radius, and
    velocity directions agree (circular variance < 0.2)."""
    config = build_scenario("cohesion", tick_limit=ticks)
    r0_rr = config.energy.robot_robot.r0
    lam = config.sensor.sensing_radius
    lo, hi = 0.5 * r0_rr, lam
    details = []
    ok = True
    for seed in seeds:
        world = world_from_config(config, seed)
        for _ in range(ticks):
            step(world, config.energy, config.sampler, config.sensor,
                 physics=config.physics, threads=threads)
        pos = [(r.position.x, r.position.y) for r in world.robots if r.alive]
        dists = [
            math.dist(pos[i], pos[j])
            for i in range(len(pos))
            for j in range(i + 1, len(pos))
        ]
        mean_pair = float(np.mean(dists))
        angles = [
            math.atan2(r.velocity.y, r.velocity.x)
            for r in world.robots
            if r.alive and r.velocity.norm() > 1e-9
        ]
        resultant = abs(sum(complex(math.cos(a), math.sin(a)) for a in angles)) / max(len(angles), 1)
        circ_var = 1.0 - resultant
        good = lo <= mean_pair <= hi and circ_var < 0.2
        ok = ok and good
        details.append(f"seed {seed}: pair={mean_pair:.2f} cv={circ_var:.3f}{'' if good else ' <-'}")
    return CheckResult(
        "cohesion (mean pairwise in [{:.2f},{:.2f}], circ var < 0.2)".format(lo, hi),
        ok,
        "; ".join(details),
    )


def scalability_batches(trials: int = 30, threads: int = 1):
    """Batches for robot counts 2/4/10/20 on seeds 0..trials-1."""
    out = {}
    for n in (2, 4, 10, 20):
        config = build_scenario("scalability", robots=n)
        out[n] = run_batch(config, seeds=range(trials), threads=threads)
    return out


def transport_success_check(batches) -> CheckResult:
    _, summary = batches[10]
    ok = summary.success_rate == 1.0
    return CheckResult(
        "transport success (10 robots, all seeds)",
        ok,
        f"success_rate={summary.success_rate:.2f}, mean={_fmt_mean(summary)}",
    )


def scalability_trend_check(batches) -> CheckResult:
    means = {n: batches[n][1].mean_time_s for n in (2, 4, 10, 20)}
    decreasing = means[2] > means[4] > means[10] > means[20]
    diminishing = (means[2] - means[4]) > (means[10] - means[20])
    detail = (
        "means "
        + " / ".join(f"{n}: {_fmt_mean(batches[n][1])}" for n in (2, 4, 10, 20))
        + f"; strictly decreasing={decreasing}, diminishing returns={diminishing}"
        + " (reference 829/593/324/278 s)"
    )
    return CheckResult("scalability trend (2>4>10>20, diminishing gains)",
                       decreasing and diminishing, detail)


def adaptability_batches(trials: int = 30, threads: int = 1):
    out = {}
    for kind in ("ideal", "failure", "goal_change"):
        config = build_scenario(kind)
        out[kind] = run_batch(config, seeds=range(trials), threads=threads)
    return out


def adaptability_trend_check(batches) -> CheckResult:
    ideal = batches["ideal"][1].mean_time_s
    failure = batches["failure"][1].mean_time_s
    goal_change = batches["goal_change"][1].mean_time_s
    ok_failure = failure > ideal
    ok_gc = abs(goal_change - ideal) <= 0.15 * ideal
    detail = (
        f"ideal {_fmt_mean(batches['ideal'][1])}, "
        f"failure {_fmt_mean(batches['failure'][1])}, "
        f"goal-change {_fmt_mean(batches['goal_change'][1])} "
        f"(reference 438/596/449 s); failure>ideal={ok_failure}, |gc-ideal|<=15%={ok_gc}"
    )
    return CheckResult("adaptability trend (failure slower, goal change ~ideal)",
                       ok_failure and ok_gc, detail)


def robustness_batches(trials: int = 10, threads: int = 1):
    out = {}
    for shape in ("rect", "octagon", "triangle"):
        for mass in (0.2, 0.4):
            config = build_scenario("robustness", shape=shape, mass=mass)
            out[(shape, mass)] = run_batch(config, seeds=range(trials), threads=threads)
    return out


def robustness_trend_check(batches) -> CheckResult:
    base = {shape: batches[(shape, 0.2)][1].mean_time_s for shape in ("rect", "octagon", "triangle")}
    shape_ok = base["triangle"] > base["rect"] and base["triangle"] > base["octagon"]
    mass_ok = all(
        batches[(shape, 0.4)][1].mean_time_s > batches[(shape, 0.2)][1].mean_time_s
        for shape in ("rect", "octagon", "triangle")
    )
    detail = (
        "base means "
        + ", ".join(f"{s}: {base[s]:.0f}s" for s in ("rect", "octagon", "triangle"))
        + "; doubled-mass means "
        + ", ".join(
            f"{s}: {batches[(s, 0.4)][1].mean_time_s:.0f}s"
            for s in ("rect", "octagon", "triangle")
        )
        + f"; triangle slowest={shape_ok}, mass doubling slower={mass_ok}"
    )
    return CheckResult("robustness trend (triangle slowest, mass slows all)",
                       shape_ok and mass_ok, detail)


def physics_contract_check() -> CheckResult:
    """Exact pass/fail: a single 0.12 m/s contact starts the reference
    object, 0.05 m/s does not, and opposed pushes cancel."""
    def fresh():
        from .experiments import object_shape

        return TransportObject(
            shape=object_shape("rect"), position=Vec2(0, 0), orientation=0.0,
            mass=0.2, goal=Vec2(1.7, 0),
        )

    pp = PhysicsParams()
    fast = fresh()
    resolve_object_motion(
        fast, [Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.12, 0))], pp, 0.1
    )
    started = fast.moving and fast.position.x > 0

    slow = fresh()
    resolve_object_motion(
        slow, [Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.05, 0))], pp, 0.1
    )
    not_started = (not slow.moving) and slow.position == Vec2(0, 0)

    opposed = fresh()
    resolve_object_motion(
        opposed,
        [
            Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.12, 0)),
            Contact(Vec2(0.25, 0), Vec2(-1, 0), Vec2(-0.12, 0)),
        ],
        pp, 0.1,
    )
    cancelled = opposed.position == Vec2(0, 0)

    ok = started and not_started and cancelled
    return CheckResult(
        "physics contract (0.12 starts, 0.05 does not, opposed cancel)",
        ok,
        f"start@0.12={started}, rest@0.05={not_started}, cancel={cancelled}",
    )


def _trace_bytes(threads: int, seed: int = 3, tick_cap: int = 1500) -> bytes:
    config = build_scenario("scalability", robots=10)
    world = world_from_config(config, seed)
    buf = io.StringIO()
    while True:
        buf.write(fileio.trace_record(world))
        buf.write("\n")
        if not isinstance(is_terminated(world, config.sensor), Running):
            break
        if world.tick >= tick_cap:
            break
        step(world, config.energy, config.sampler, config.sensor,
             physics=config.physics, threads=threads)
    return buf.getvalue().encode()


def determinism_check() -> CheckResult:
    a = _trace_bytes(threads=1)
    b = _trace_bytes(threads=8)
    ok = a == b
    return CheckResult(
        "determinism (threads 1 vs 8, byte-identical trace)",
        ok,
        f"{len(a)} bytes vs {len(b)} bytes, equal={ok}",
    )


def run_suite(trials: int = 30, threads: int = 1, verbose: bool = False) -> list[CheckResult]:
    checks = []

    def log(msg):
        if verbose:
            print(f"[suite] {msg}", flush=True)

    log("physics contract")
    checks.append(physics_contract_check())
    log("determinism")
    checks.append(determinism_check())
    log("cohesion (10 seeds x 2000 ticks)")
    checks.append(cohesion_check(threads=threads))
    log(f"scalability batches ({trials} trials x 4 sizes)")
    sb = scalability_batches(trials=trials, threads=threads)
    checks.append(transport_success_check(sb))
    checks.append(scalability_trend_check(sb))
    log(f"adaptability batches ({trials} trials x 3 scenarios)")
    ab = adaptability_batches(trials=trials, threads=threads)
    checks.append(adaptability_trend_check(ab))
    log("robustness batches (10 trials x 6 cells)")
    rb = robustness_batches(trials=min(trials, 10), threads=threads)
    checks.append(robustness_trend_check(rb))
    return checks
