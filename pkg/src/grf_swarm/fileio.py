"""File formats: JSONL traces, scenario config JSON, result CSVs, and the
run manifest.

Floats in trace records are rendered at 9 significant digits with a fixed
field order, so a seeded run re-serializes byte-identically regardless of
thread count. All outputs are written atomically (temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from typing import IO, Iterable, Optional

from . import __version__
from .geometry import Vec2
from .potential import CBParams, EnergyParams
from .sampler import SamplerParams
from .sensing import Mode, SensorParams
from .world import (
    AtTick,
    DistanceToGoalBelow,
    GoalChange,
    KillRobots,
    NextWaypoint,
    PhysicsParams,
    PushersAtLeast,
    WorldState,
)


class ConfigError(ValueError):
    """Config validation failure, carrying the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return "null"
    return f"{x:.9g}"


def trace_record(world: WorldState) -> str:
    """One JSONL line for one tick."""
    robots = []
    for r in world.robots:
        mode = world.modes.get(r.id, Mode.CIRCULATE)
        robots.append(
            f'{{"id":{r.id},"x":{_fmt(r.position.x)},"y":{_fmt(r.position.y)},'
            f'"vx":{_fmt(r.velocity.x)},"vy":{_fmt(r.velocity.y)},'
            f'"alive":{"true" if r.alive else "false"},"mode":"{mode.value}"}}'
        )
    if world.object is not None:
        c = world.object.centroid()
        dist = (c - world.object.goal).norm()
        obj = (
            f'{{"x":{_fmt(world.object.position.x)},"y":{_fmt(world.object.position.y)},'
            f'"theta":{_fmt(world.object.orientation)},'
            f'"goal_x":{_fmt(world.object.goal.x)},"goal_y":{_fmt(world.object.goal.y)}}}'
        )
        dist_s = _fmt(dist)
        speed_s = _fmt(world.object.velocity.norm())
    else:
        obj = "null"
        dist_s = "null"
        speed_s = "null"
    return (
        f'{{"tick":{world.tick},"robots":[{",".join(robots)}],'
        f'"object":{obj},"dist_to_goal":{dist_s},"object_speed":{speed_s}}}'
    )


def write_trace(world_series: Iterable[WorldState], fp: IO[str]) -> int:
    """Write one record per world state; returns the record count."""
    n = 0
    for world in world_series:
        fp.write(trace_record(world))
        fp.write("\n")
        n += 1
    return n


def read_trace(fp: IO[str]) -> list[dict]:
    return [json.loads(line) for line in fp if line.strip()]


def atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- scenario config serialization -------------------------------------------


def _cb_to_dict(p: CBParams) -> dict:
    return {
        "epsilon": p.epsilon,
        "r0": p.r0,
        "alpha": p.alpha,
        "charge_product": p.charge_product,
        "eps0": p.eps0,
    }


def _trigger_to_dict(t) -> dict:
    if isinstance(t, AtTick):
        return {"type": "at_tick", "tick": t.tick}
    if isinstance(t, DistanceToGoalBelow):
        return {"type": "distance_below", "distance": t.distance}
    if isinstance(t, PushersAtLeast):
        return {"type": "pushers_at_least", "count": t.count}
    raise TypeError(f"unknown trigger {t!r}")


def _event_to_dict(e) -> dict:
    if isinstance(e, GoalChange):
        goal = None if e.new_goal is None else [e.new_goal.x, e.new_goal.y]
        return {"type": "goal_change", "goal": goal, "back_distance": e.back_distance}
    if isinstance(e, KillRobots):
        return {
            "type": "kill_robots",
            "ids": list(e.ids) if e.ids is not None else None,
            "count": e.count,
        }
    if isinstance(e, NextWaypoint):
        return {"type": "next_waypoint"}
    raise TypeError(f"unknown event {e!r}")


def config_to_dict(config) -> dict:
    obj = None
    if config.object_shape is not None:
        obj = {
            "shape": config.object_shape,
            "scale": config.object_scale,
            "mass_kg": config.object_mass,
            "position": list(config.object_position),
        }
    e = config.energy
    return {
        "name": config.name,
        "robot_count": config.robot_count,
        "robot_radius": config.robot_radius,
        "dt": config.dt,
        "tick_limit": config.tick_limit,
        "seeds": list(config.seeds),
        "arena_half": config.arena_half,
        "spawn_half": config.spawn_half,
        "object": obj,
        "goal": list(config.goal),
        "waypoints": [list(w) for w in config.waypoints],
        "obstacles": [[list(v) for v in poly] for poly in config.obstacles],
        "events": [
            {"trigger": _trigger_to_dict(t), "event": _event_to_dict(ev)}
            for t, ev in config.events
        ],
        "energy": {
            "robot_robot": _cb_to_dict(e.robot_robot),
            "robot_obstacle": _cb_to_dict(e.robot_obstacle),
            "robot_object": _cb_to_dict(e.robot_object),
            "delta_circulate": e.delta_circulate,
            "delta_push": e.delta_push,
            "movearound_range": e.movearound_range,
            "rho": e.rho,
            "group_mass": e.group_mass,
            "v_max": e.v_max,
        },
        "sampler": {
            "temperature": config.sampler.temperature,
            "iterations": config.sampler.iterations,
            "burn_in": config.sampler.burn_in,
            "proposal_sigma": config.sampler.proposal_sigma,
            "v_max": config.sampler.v_max,
        },
        "sensor": {
            "sensing_radius": config.sensor.sensing_radius,
            "beam_count": config.sensor.beam_count,
            "goal_stop_radius": config.sensor.goal_stop_radius,
        },
        "physics": {
            "static_start_speed": config.physics.static_start_speed,
            "kinetic_keep_speed": config.physics.kinetic_keep_speed,
            "contact_stiffness": config.physics.contact_stiffness,
            "friction_kinetic_coeff": config.physics.friction_kinetic_coeff,
            "rotation_enabled": config.physics.rotation_enabled,
            "rot_gain": config.physics.rot_gain,
            "speed_cap": config.physics.speed_cap,
        },
    }


def _need(d: dict, key: str, kind, path: str):
    if key not in d:
        raise ConfigError(f"{path}{key}", "missing required field")
    v = d[key]
    if kind is float:
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{path}{key}", f"expected a number, got {type(v).__name__}")
        return float(v)
    if kind is int:
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigError(f"{path}{key}", f"expected an integer, got {type(v).__name__}")
        return v
    if kind is str:
        if not isinstance(v, str):
            raise ConfigError(f"{path}{key}", f"expected a string, got {type(v).__name__}")
        return v
    if kind is bool:
        if not isinstance(v, bool):
            raise ConfigError(f"{path}{key}", f"expected a boolean, got {type(v).__name__}")
        return v
    if kind is list:
        if not isinstance(v, list):
            raise ConfigError(f"{path}{key}", f"expected a list, got {type(v).__name__}")
        return v
    if kind is dict:
        if not isinstance(v, dict):
            raise ConfigError(f"{path}{key}", f"expected an object, got {type(v).__name__}")
        return v
    raise AssertionError(kind)


def _point(v, path: str) -> tuple[float, float]:
    if (
        not isinstance(v, list)
        or len(v) != 2
        or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)
    ):
        raise ConfigError(path, "expected [x, y]")
    return (float(v[0]), float(v[1]))


def _cb_from_dict(d: dict, path: str) -> CBParams:
    try:
        return CBParams(
            epsilon=_need(d, "epsilon", float, path),
            r0=_need(d, "r0", float, path),
            alpha=_need(d, "alpha", float, path),
            charge_product=_need(d, "charge_product", float, path),
            eps0=_need(d, "eps0", float, path),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(path.rstrip("."), str(err)) from err


def _trigger_from_dict(d: dict, path: str):
    kind = _need(d, "type", str, path)
    if kind == "at_tick":
        return AtTick(tick=_need(d, "tick", int, path))
    if kind == "distance_below":
        return DistanceToGoalBelow(distance=_need(d, "distance", float, path))
    if kind == "pushers_at_least":
        return PushersAtLeast(count=_need(d, "count", int, path))
    raise ConfigError(f"{path}type", f"unknown trigger type {kind!r}")


def _event_from_dict(d: dict, path: str):
    kind = _need(d, "type", str, path)
    if kind == "goal_change":
        back = d.get("back_distance", 0.0)
        if not isinstance(back, (int, float)) or isinstance(back, bool):
            raise ConfigError(f"{path}back_distance", "expected a number")
        if d.get("goal") is None:
            if back <= 0:
                raise ConfigError(f"{path}back_distance",
                                  "must be > 0 when goal is null")
            return GoalChange(new_goal=None, back_distance=float(back))
        return GoalChange(new_goal=Vec2(*_point(d.get("goal"), f"{path}goal")),
                          back_distance=float(back))
    if kind == "kill_robots":
        ids = d.get("ids")
        if ids is not None:
            if not isinstance(ids, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) for i in ids
            ):
                raise ConfigError(f"{path}ids", "expected a list of integers or null")
            ids = tuple(ids)
        count = d.get("count", 0)
        if not isinstance(count, int) or isinstance(count, bool):
            raise ConfigError(f"{path}count", "expected an integer")
        return KillRobots(ids=ids, count=count)
    if kind == "next_waypoint":
        return NextWaypoint()
    raise ConfigError(f"{path}type", f"unknown event type {kind!r}")


def config_from_dict(d: dict):
    """Parse and validate a scenario config; raises ConfigError with a
    field path on the first violation."""
    from .experiments import SHAPES, ScenarioConfig  # local: avoids cycle

    if not isinstance(d, dict):
        raise ConfigError("", "config root must be an object")

    name = _need(d, "name", str, "")
    robot_count = _need(d, "robot_count", int, "")
    if robot_count < 1:
        raise ConfigError("robot_count", "must be >= 1")
    robot_radius = _need(d, "robot_radius", float, "")
    if robot_radius <= 0:
        raise ConfigError("robot_radius", "must be > 0")
    dt = _need(d, "dt", float, "")
    if dt <= 0:
        raise ConfigError("dt", "must be > 0")
    tick_limit = _need(d, "tick_limit", int, "")
    if tick_limit < 1:
        raise ConfigError("tick_limit", "must be >= 1")
    seeds_raw = _need(d, "seeds", list, "")
    if not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds_raw):
        raise ConfigError("seeds", "expected a list of integers")
    if len(set(seeds_raw)) != len(seeds_raw):
        raise ConfigError("seeds", "seeds must be distinct")
    arena_half = _need(d, "arena_half", float, "")
    if arena_half <= 0:
        raise ConfigError("arena_half", "must be > 0")
    spawn_half = d.get("spawn_half")
    if spawn_half is not None:
        if not isinstance(spawn_half, (int, float)) or isinstance(spawn_half, bool):
            raise ConfigError("spawn_half", "expected a number or null")
        spawn_half = float(spawn_half)

    obj = d.get("object")
    if obj is None:
        shape = None
        scale = 1.0
        mass = 0.2
        position = (0.0, 0.0)
    else:
        if not isinstance(obj, dict):
            raise ConfigError("object", "expected an object or null")
        shape = _need(obj, "shape", str, "object.")
        if shape not in SHAPES:
            raise ConfigError("object.shape", f"expected one of {list(SHAPES)}")
        scale = _need(obj, "scale", float, "object.")
        if scale <= 0:
            raise ConfigError("object.scale", "must be > 0")
        mass = _need(obj, "mass_kg", float, "object.")
        if mass <= 0:
            raise ConfigError("object.mass_kg", "must be > 0")
        position = _point(obj.get("position"), "object.position")

    goal = _point(d.get("goal", [1.7, 0.0]), "goal")
    waypoints = tuple(
        _point(w, f"waypoints[{i}]") for i, w in enumerate(d.get("waypoints", []))
    )
    obstacles = []
    for i, poly in enumerate(d.get("obstacles", [])):
        if not isinstance(poly, list) or len(poly) < 3:
            raise ConfigError(f"obstacles[{i}]", "expected a list of >= 3 vertices")
        obstacles.append(tuple(_point(v, f"obstacles[{i}][{j}]") for j, v in enumerate(poly)))

    events = []
    for i, entry in enumerate(d.get("events", [])):
        if not isinstance(entry, dict):
            raise ConfigError(f"events[{i}]", "expected an object")
        trig = _trigger_from_dict(
            _need(entry, "trigger", dict, f"events[{i}]."), f"events[{i}].trigger."
        )
        ev = _event_from_dict(
            _need(entry, "event", dict, f"events[{i}]."), f"events[{i}].event."
        )
        events.append((trig, ev))

    en = _need(d, "energy", dict, "")
    try:
        energy = EnergyParams(
            robot_robot=_cb_from_dict(_need(en, "robot_robot", dict, "energy."), "energy.robot_robot."),
            robot_obstacle=_cb_from_dict(_need(en, "robot_obstacle", dict, "energy."), "energy.robot_obstacle."),
            robot_object=_cb_from_dict(_need(en, "robot_object", dict, "energy."), "energy.robot_object."),
            delta_circulate=_need(en, "delta_circulate", float, "energy."),
            delta_push=_need(en, "delta_push", float, "energy."),
            movearound_range=_need(en, "movearound_range", float, "energy."),
            rho=_need(en, "rho", float, "energy."),
            group_mass=_need(en, "group_mass", float, "energy."),
            v_max=_need(en, "v_max", float, "energy."),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError("energy", str(err)) from err

    sa = _need(d, "sampler", dict, "")
    try:
        sampler = SamplerParams(
            temperature=_need(sa, "temperature", float, "sampler."),
            iterations=_need(sa, "iterations", int, "sampler."),
            burn_in=_need(sa, "burn_in", int, "sampler."),
            proposal_sigma=_need(sa, "proposal_sigma", float, "sampler."),
            v_max=_need(sa, "v_max", float, "sampler."),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError("sampler", str(err)) from err

    se = _need(d, "sensor", dict, "")
    try:
        sensor = SensorParams(
            sensing_radius=_need(se, "sensing_radius", float, "sensor."),
            beam_count=_need(se, "beam_count", int, "sensor."),
            goal_stop_radius=_need(se, "goal_stop_radius", float, "sensor."),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError("sensor", str(err)) from err

    ph = _need(d, "physics", dict, "")
    try:
        physics = PhysicsParams(
            static_start_speed=_need(ph, "static_start_speed", float, "physics."),
            kinetic_keep_speed=_need(ph, "kinetic_keep_speed", float, "physics."),
            contact_stiffness=_need(ph, "contact_stiffness", float, "physics."),
            friction_kinetic_coeff=_need(ph, "friction_kinetic_coeff", float, "physics."),
            rotation_enabled=_need(ph, "rotation_enabled", bool, "physics."),
            rot_gain=_need(ph, "rot_gain", float, "physics."),
            speed_cap=_need(ph, "speed_cap", float, "physics."),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError("physics", str(err)) from err

    try:
        return ScenarioConfig(
            name=name,
            robot_count=robot_count,
            object_shape=shape,
            object_scale=scale,
            object_mass=mass,
            object_position=position,
            goal=goal,
            waypoints=waypoints,
            arena_half=arena_half,
            obstacles=tuple(obstacles),
            events=tuple(events),
            spawn_half=spawn_half,
            seeds=tuple(seeds_raw),
            tick_limit=tick_limit,
            dt=dt,
            robot_radius=robot_radius,
            energy=energy,
            sampler=sampler,
            sensor=sensor,
            physics=physics,
        )
    except ValueError as err:
        raise ConfigError("", str(err)) from err


def save_config(config, path: str) -> None:
    atomic_write_text(path, json.dumps(config_to_dict(config), indent=2, sort_keys=True) + "\n")


def load_config(path: str):
    with open(path) as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as err:
            raise ConfigError("", f"invalid JSON: {err}") from err
    return config_from_dict(raw)


def config_hash(config) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# -- result files -------------------------------------------------------------

SUMMARY_COLUMNS = "scenario,robots,shape,scale,mass_kg,n,success_rate,mean_time_s,ci95_s"


def summary_csv(config, summary) -> str:
    shape = config.object_shape if config.object_shape is not None else "none"
    return (
        SUMMARY_COLUMNS + "\n"
        + f"{config.name},{config.robot_count},{shape},{config.object_scale:.9g},"
        f"{config.object_mass:.9g},{summary.n},{summary.success_rate:.9g},"
        f"{summary.mean_time_s:.9g},{summary.ci95_halfwidth_s:.9g}\n"
    )


def trials_csv(results) -> str:
    lines = ["seed,outcome,transport_time_s,detect_to_goal_s"]
    for r in results:
        d = "" if r.detect_to_goal_s is None else f"{r.detect_to_goal_s:.9g}"
        lines.append(f"{r.seed},{r.outcome},{r.transport_time_s:.9g},{d}")
    return "\n".join(lines) + "\n"


def series_csv(result) -> str:
    """Plot-ready distance/speed time series for one trial."""
    lines = ["tick,time_s,dist_to_goal_m,object_speed_mps"]
    speed = dict(result.speed_series)
    for tick, dist in result.distance_series:
        lines.append(f"{tick},{tick * 0.1:.9g},{dist:.9g},{speed.get(tick, 0.0):.9g}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RunManifest:
    """Provenance for one invocation, written before any trial runs."""

    config_path: Optional[str]
    config_sha256: str
    seeds: tuple[int, ...]
    output_dir: str
    tool_version: str = __version__

    def to_json(self) -> str:
        return json.dumps(
            {
                "config_path": self.config_path,
                "config_sha256": self.config_sha256,
                "seeds": list(self.seeds),
                "output_dir": self.output_dir,
                "tool_version": self.tool_version,
            },
            indent=2,
            sort_keys=True,
        ) + "\n"


def write_manifest(manifest: RunManifest, path: str) -> None:
    atomic_write_text(path, manifest.to_json())
