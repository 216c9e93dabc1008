"""Scenario builders, trial runner, and batch statistics.

Scenarios follow the simulated-experiment protocols: a 4 x 4 m arena, a
pushable object with a goal (scalability: object centered, goal 1.7 m
ahead; adaptability/robustness: 2.6 m of transport), robots placed
uniformly at random in free space per seed, and scripted events for
failure and goal-change runs. Batches aggregate transport times with
Student-t 95% confidence intervals.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import stats

from .geometry import Polygon, Vec2, closest_point_on_polygon
from .potential import EnergyParams
from .sampler import SamplerParams
from .sensing import SensorParams
from .world import (
    DistanceToGoalBelow,
    Event,
    GoalChange,
    KillRobots,
    NextWaypoint,
    PhysicsParams,
    PushersAtLeast,
    RobotState,
    Running,
    Success,
    Timeout,
    TransportObject,
    Trigger,
    WorldState,
    is_terminated,
    step,
)

ROBOT_RADIUS = 0.05
ARENA_HALF = 2.0
DT = 0.1
TICK_LIMIT = 20_000

# Object shapes share the footprint area of the 0.5 x 0.4 m rectangle at
# scale 1, so shape is the only varying factor in robustness runs.
RECT_AREA = 0.5 * 0.4

SHAPES = ("rect", "octagon", "triangle")


def object_shape(kind: str, scale: float = 1.0) -> Polygon:
    """Body-frame polygon (centroid at the origin) for one of the three
    object shapes, linearly scaled."""
    if kind == "rect":
        hw, hh = 0.25 * scale, 0.2 * scale
        return Polygon([Vec2(-hw, -hh), Vec2(hw, -hh), Vec2(hw, hh), Vec2(-hw, hh)])
    if kind == "octagon":
        # regular octagon, area = RECT_AREA at scale 1
        side = math.sqrt(RECT_AREA / (2.0 * (1.0 + math.sqrt(2.0))))
        radius = side / (2.0 * math.sin(math.pi / 8.0)) * scale
        return Polygon(
            Vec2(radius * math.cos((2 * k + 1) * math.pi / 8.0),
                 radius * math.sin((2 * k + 1) * math.pi / 8.0))
            for k in range(8)
        )
    if kind == "triangle":
        # equilateral triangle, area = RECT_AREA at scale 1
        side = math.sqrt(4.0 * RECT_AREA / math.sqrt(3.0))
        radius = side / math.sqrt(3.0) * scale
        return Polygon(
            Vec2(radius * math.cos(2 * math.pi * k / 3.0 + math.pi / 2.0),
                 radius * math.sin(2 * math.pi * k / 3.0 + math.pi / 2.0))
            for k in range(3)
        )
    raise ValueError(f"unknown shape {kind!r} (expected one of {SHAPES})")


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce a trial family deterministically."""

    name: str
    robot_count: int
    object_shape: Optional[str] = "rect"  # None: no object (cohesion runs)
    object_scale: float = 1.0
    object_mass: float = 0.2
    object_position: tuple[float, float] = (0.0, 0.0)
    goal: tuple[float, float] = (1.7, 0.0)
    waypoints: tuple[tuple[float, float], ...] = ()
    arena_half: float = ARENA_HALF
    obstacles: tuple[tuple[tuple[float, float], ...], ...] = ()
    events: tuple[tuple[Trigger, Event], ...] = ()
    spawn_half: Optional[float] = None  # robots spawn within this box
    seeds: tuple[int, ...] = tuple(range(30))
    tick_limit: int = TICK_LIMIT
    dt: float = DT
    robot_radius: float = ROBOT_RADIUS
    energy: EnergyParams = field(default_factory=EnergyParams)
    sampler: SamplerParams = field(default_factory=SamplerParams)
    sensor: SensorParams = field(default_factory=SensorParams)
    physics: PhysicsParams = field(default_factory=PhysicsParams)

    def __post_init__(self):
        if self.robot_count < 1:
            raise ValueError("robot_count must be >= 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        if self.object_shape is not None and self.object_shape not in SHAPES:
            raise ValueError(f"unknown shape {self.object_shape!r}")
        if self.object_mass <= 0:
            raise ValueError("object_mass must be > 0")
        if self.object_scale <= 0:
            raise ValueError("object_scale must be > 0")
        if self.tick_limit < 1:
            raise ValueError("tick_limit must be >= 1")


def build_scenario(kind: str, **kwargs) -> ScenarioConfig:
    """Named scenario families.

    kind:
      - "scalability": robots=N (the swarm size), rect object centered,
        goal 1.7 m ahead.
      - "ideal": the adaptability baseline, 10 robots, 2.6 m transport.
      - "failure": ideal plus 4 robots dying once >= 4 are pushing.
      - "goal_change": ideal, but the goal doubles back to the start
        position once the object is within 1.3 m of it.
      - "robustness": shape/scale/mass cell at the 2.6 m geometry.
      - "waypoints": L-corridor with a sequence of goals.
      - "cohesion": no object, robots flock in open space.
    Unknown kwargs or out-of-range parameters raise ValueError.
    """
    def take(name, default):
        return kwargs.pop(name, default)

    if kind == "scalability":
        robots = int(take("robots", 10))
        cfg = ScenarioConfig(
            name=f"scalability-{robots}",
            robot_count=robots,
            object_position=(0.0, 0.0),
            goal=(1.7, 0.0),
            **kwargs,
        )
    elif kind in ("ideal", "failure", "goal_change"):
        robots = int(take("robots", 10))
        base = dict(
            robot_count=robots,
            object_position=(-1.1, 0.0),
            goal=(1.5, 0.0),
        )
        if kind == "failure":
            count = int(take("kill_count", 4))
            cfg = ScenarioConfig(
                name="adaptability-failure",
                events=((PushersAtLeast(count), KillRobots(ids=None, count=count)),),
                **base,
                **kwargs,
            )
        elif kind == "goal_change":
            # fires with 1.3 m to go; the goal then moves 1.3 m the other
            # way (behind the object), so the total pushed distance stays
            # comparable to the ideal run
            cfg = ScenarioConfig(
                name="adaptability-goal-change",
                events=((DistanceToGoalBelow(1.3), GoalChange(new_goal=None, back_distance=1.3)),),
                **base,
                **kwargs,
            )
        else:
            cfg = ScenarioConfig(name="adaptability-ideal", **base, **kwargs)
    elif kind == "robustness":
        shape = take("shape", "rect")
        scale = float(take("scale", 1.0))
        mass = float(take("mass", 0.2))
        robots = int(take("robots", 10))
        if scale not in (1.0, 2.0):
            raise ValueError("robustness scale must be 1.0 or 2.0")
        cfg = ScenarioConfig(
            name=f"robustness-{shape}-x{scale:g}-{mass:g}kg",
            robot_count=robots,
            object_shape=shape,
            object_scale=scale,
            object_mass=mass,
            object_position=(-1.1, 0.0),
            goal=(1.5, 0.0),
            **kwargs,
        )
    elif kind == "waypoints":
        robots = int(take("robots", 10))
        path = tuple(tuple(p) for p in take("path", ((1.2, -1.2), (1.2, 1.2), (-1.2, 1.2))))
        if len(path) < 1:
            raise ValueError("waypoints path must be nonempty")
        stop = SensorParams().goal_stop_radius
        cfg = ScenarioConfig(
            name="waypoints",
            robot_count=robots,
            object_position=(-1.2, -1.2),
            goal=path[0],
            waypoints=path[1:],
            obstacles=(((-0.4, -0.4), (0.4, -0.4), (0.4, 0.4), (-0.4, 0.4)),),
            events=tuple(
                (DistanceToGoalBelow(stop), NextWaypoint()) for _ in path[1:]
            ),
            **kwargs,
        )
    elif kind == "cohesion":
        robots = int(take("robots", 10))
        cfg = ScenarioConfig(
            name="cohesion",
            robot_count=robots,
            object_shape=None,
            arena_half=30.0,
            spawn_half=1.0,
            tick_limit=int(take("tick_limit", 2000)),
            **kwargs,
        )
    else:
        raise ValueError(f"unknown scenario kind {kind!r}")
    return cfg


# Spawn-placement RNG stream tag; one-element spawn keys never collide
# with the per-robot (robot_id, tick) sampler streams.
PLACEMENT_STREAM = 999


def _spawn_positions(config: ScenarioConfig, seed: int, footprint: Optional[Polygon]):
    """Uniform rejection sampling over free space, deterministic in seed."""
    gen = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(PLACEMENT_STREAM,)))
    )
    half = config.spawn_half if config.spawn_half is not None else config.arena_half
    margin = config.robot_radius * 2.0
    lo, hi = -half + margin, half - margin
    obstacles = [Polygon(Vec2(x, y) for x, y in poly) for poly in config.obstacles]
    placed: list[Vec2] = []
    attempts = 0
    while len(placed) < config.robot_count:
        attempts += 1
        if attempts > 100_000:
            raise RuntimeError("could not place robots; scenario too crowded")
        x, y = gen.uniform(lo, hi, 2)
        p = Vec2(float(x), float(y))
        if footprint is not None:
            _, d, _ = closest_point_on_polygon(p, footprint)
            if footprint.contains(p) or d < config.robot_radius + 0.05:
                continue
        if any(
            ob.contains(p) or closest_point_on_polygon(p, ob)[1] < config.robot_radius + 0.02
            for ob in obstacles
        ):
            continue
        if any((p - q).norm() < 3.0 * config.robot_radius for q in placed):
            continue
        placed.append(p)
    return placed


def world_from_config(config: ScenarioConfig, seed: int) -> WorldState:
    """Instantiate the world for one trial, deterministic in (config, seed)."""
    half = config.arena_half
    arena = Polygon([Vec2(-half, -half), Vec2(half, -half), Vec2(half, half), Vec2(-half, half)])
    obj = None
    footprint = None
    if config.object_shape is not None:
        shape = object_shape(config.object_shape, config.object_scale)
        obj = TransportObject(
            shape=shape,
            position=Vec2(*config.object_position),
            orientation=0.0,
            mass=config.object_mass,
            goal=Vec2(*config.goal),
            waypoints=tuple(Vec2(*w) for w in config.waypoints),
        )
        footprint = obj.world_polygon()
    robots = [
        RobotState(id=i, position=p, radius=config.robot_radius)
        for i, p in enumerate(_spawn_positions(config, seed, footprint))
    ]
    return WorldState(
        robots=robots,
        arena=arena,
        object=obj,
        obstacles=[Polygon(Vec2(x, y) for x, y in poly) for poly in config.obstacles],
        dt=config.dt,
        events=list(config.events),
        seed=seed,
        tick_limit=config.tick_limit,
    )


@dataclass(frozen=True)
class TrialResult:
    """One trial's outcome and per-tick series."""

    seed: int
    outcome: str  # "success" | "timeout"
    transport_time_s: float  # start of run -> arrival (or limit)
    detect_to_goal_s: Optional[float]  # first object detection -> arrival
    distance_series: tuple[tuple[int, float], ...]
    speed_series: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean_time_s: float
    ci95_halfwidth_s: float
    success_rate: float


def mean_ci95(values) -> tuple[float, float]:
    """Mean and Student-t 95% half-width (n-1 dof)."""
    vals = list(values)
    if len(vals) < 2:
        raise ValueError("need at least 2 values for a confidence interval")
    mean = float(np.mean(vals))
    sd = float(np.std(vals, ddof=1))
    t = float(stats.t.ppf(0.975, len(vals) - 1))
    return mean, t * sd / math.sqrt(len(vals))


def run_trial(config: ScenarioConfig, seed: int, threads: int = 1) -> TrialResult:
    """Step one world to Success or Timeout, recording per-tick series."""
    world = world_from_config(config, seed)
    distance: list[tuple[int, float]] = []
    speed: list[tuple[int, float]] = []
    outcome = "timeout"
    while True:
        status = is_terminated(world, config.sensor)
        if isinstance(status, Success):
            outcome = "success"
            break
        if isinstance(status, Timeout):
            break
        if world.object is not None:
            distance.append(
                (world.tick, (world.object.centroid() - world.object.goal).norm())
            )
            speed.append((world.tick, world.object.velocity.norm()))
        step(world, config.energy, config.sampler, config.sensor,
             physics=config.physics, threads=threads)
    transport_time = world.tick * config.dt
    detect_to_goal = None
    if outcome == "success" and world.object_detected_tick is not None:
        detect_to_goal = (world.tick - world.object_detected_tick) * config.dt
    return TrialResult(
        seed=seed,
        outcome=outcome,
        transport_time_s=transport_time,
        detect_to_goal_s=detect_to_goal,
        distance_series=tuple(distance),
        speed_series=tuple(speed),
    )


def _trial_task(args):
    config, seed = args
    return run_trial(config, seed)


def run_batch(
    config: ScenarioConfig,
    seeds=None,
    threads: int = 1,
) -> tuple[list[TrialResult], SummaryStats]:
    """Run independent trials (optionally in parallel processes) and
    aggregate statistics over the successful ones."""
    seeds = list(config.seeds if seeds is None else seeds)
    if not seeds:
        raise ValueError("seeds must be nonempty")
    if threads > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_trial_task, [(config, s) for s in seeds]))
    else:
        results = [run_trial(config, s) for s in seeds]
    results.sort(key=lambda r: r.seed)
    times = [r.transport_time_s for r in results if r.outcome == "success"]
    if len(times) >= 2:
        mean, hw = mean_ci95(times)
    elif len(times) == 1:
        mean, hw = times[0], float("nan")
    else:
        mean, hw = float("nan"), float("nan")
    summary = SummaryStats(
        n=len(times),
        mean_time_s=mean,
        ci95_halfwidth_s=hw,
        success_rate=len(times) / len(seeds),
    )
    return results, summary
