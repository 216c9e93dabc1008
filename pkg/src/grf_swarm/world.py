"""Simulation state and stepping.

One tick: freeze the state, let every alive robot sense / decide / sample
a velocity against that frozen snapshot, fire due scripted events,
integrate holonomic kinematics, resolve overlaps, and advance the
pushable object through a quasi-static velocity-level contact model
(drive must beat a static threshold to start the object and a kinetic
threshold to keep it moving).

Robot sensing and sampling are phase-parallel: outputs are keyed by
robot id and every robot draws from its own (seed, id, tick) random
stream, so results do not depend on scheduling or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

from . import _kernels
from .geometry import Polygon, Vec2, closest_point_on_polygon
from .potential import EnergyParams, build_context_arrays
from .sampler import RngStream, SamplerParams, clip_speed
from .sensing import Mode, SensorParams, build_sense_cache, occlusion_mode, sense_arrays

# Mass for which the physics thresholds are quoted; heavier objects scale
# the start threshold up and the drive-to-velocity gain down linearly.
REFERENCE_MASS = 0.2

_OVERLAP_TOL = 1e-9
_MAX_OVERLAP_PASSES = 12


@dataclass
class RobotState:
    """One robot: a holonomic disc with an alive flag. Dead robots stop
    actuating but stay physical."""

    id: int
    position: Vec2
    velocity: Vec2 = Vec2(0.0, 0.0)
    radius: float = 0.05
    alive: bool = True
    last_heading: Optional[Vec2] = None


@dataclass
class TransportObject:
    """The pushable body: a polygon shape in body frame (centroid at the
    origin), a pose, a goal, and optional follow-up waypoints."""

    shape: Polygon
    position: Vec2
    orientation: float
    mass: float
    goal: Vec2
    waypoints: tuple[Vec2, ...] = ()
    velocity: Vec2 = Vec2(0.0, 0.0)
    angular_velocity: float = 0.0
    moving: bool = False

    def world_polygon(self) -> Polygon:
        c = math.cos(self.orientation)
        s = math.sin(self.orientation)
        return Polygon(
            Vec2(
                self.position.x + c * v.x - s * v.y,
                self.position.y + s * v.x + c * v.y,
            )
            for v in self.shape.vertices
        )

    def centroid(self) -> Vec2:
        return self.world_polygon().centroid()


@dataclass(frozen=True)
class PhysicsParams:
    """Quasi-static pushing thresholds and gains.

    contact_stiffness and friction_kinetic_coeff are reserved for a
    force-based variant; the velocity-level model here does not consume
    them.
    """

    static_start_speed: float = 0.10
    kinetic_keep_speed: float = 0.01
    contact_stiffness: float = 1000.0
    friction_kinetic_coeff: float = 1.0
    rotation_enabled: bool = True
    rot_gain: float = 0.5
    speed_cap: float = 0.12

    def __post_init__(self):
        if not self.kinetic_keep_speed < self.static_start_speed:
            raise ValueError("kinetic_keep_speed must be < static_start_speed")
        if self.contact_stiffness <= 0:
            raise ValueError("contact_stiffness must be > 0")


# Scripted event triggers.


@dataclass(frozen=True)
class AtTick:
    tick: int


@dataclass(frozen=True)
class DistanceToGoalBelow:
    distance: float


@dataclass(frozen=True)
class PushersAtLeast:
    count: int


Trigger = Union[AtTick, DistanceToGoalBelow, PushersAtLeast]


# Scripted events.


@dataclass(frozen=True)
class GoalChange:
    """Replace the goal. With new_goal=None, the goal moves back_distance
    behind the object (opposite the current goal direction), resolved when
    the event fires."""

    new_goal: Optional[Vec2]
    back_distance: float = 0.0


@dataclass(frozen=True)
class KillRobots:
    """Kill an explicit id list, or with ids=None the `count` lowest-id
    robots that are pushing and in contact when the event fires."""

    ids: Optional[tuple[int, ...]] = None
    count: int = 0


@dataclass(frozen=True)
class NextWaypoint:
    pass


Event = Union[GoalChange, KillRobots, NextWaypoint]


@dataclass
class WorldState:
    robots: list[RobotState]
    arena: Polygon
    object: Optional[TransportObject] = None
    obstacles: list[Polygon] = field(default_factory=list)
    tick: int = 0
    dt: float = 0.1
    events: list[tuple[Trigger, Event]] = field(default_factory=list)
    seed: int = 0
    tick_limit: int = 20_000
    modes: dict[int, Mode] = field(default_factory=dict)
    object_detected_tick: Optional[int] = None

    def robot_by_id(self, robot_id: int) -> RobotState:
        for r in self.robots:
            if r.id == robot_id:
                return r
        raise ValueError(f"unknown robot id {robot_id}")


# Termination statuses.


class Success:
    def __repr__(self):
        return "Success()"

    def __eq__(self, other):
        return isinstance(other, Success)


class Running:
    def __repr__(self):
        return "Running()"

    def __eq__(self, other):
        return isinstance(other, Running)


@dataclass(frozen=True)
class Timeout:
    tick_limit: int


Status = Union[Success, Running, Timeout]


@dataclass(frozen=True)
class Contact:
    point: Vec2
    inward_normal: Vec2
    robot_velocity: Vec2


def apply_kinematics(position: Vec2, v: Vec2, dt: float) -> Vec2:
    """Holonomic integrator: position + v * dt."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    return Vec2(position.x + v.x * dt, position.y + v.y * dt)


def inject_event(world: WorldState, event: Event) -> WorldState:
    """Apply one scripted event in place and return the world."""
    if isinstance(event, GoalChange):
        if world.object is None:
            raise ValueError("GoalChange requires an object")
        if event.new_goal is None:
            raise ValueError("GoalChange goal must be resolved before injection")
        world.object.goal = event.new_goal
    elif isinstance(event, KillRobots):
        if event.ids is None:
            raise ValueError("KillRobots ids must be resolved before injection")
        for rid in event.ids:
            robot = world.robot_by_id(rid)
            robot.alive = False
            robot.velocity = Vec2(0.0, 0.0)
    elif isinstance(event, NextWaypoint):
        if world.object is None:
            raise ValueError("NextWaypoint requires an object")
        if world.object.waypoints:
            world.object.goal = world.object.waypoints[0]
            world.object.waypoints = world.object.waypoints[1:]
    else:
        raise TypeError(f"unknown event {event!r}")
    return world


def object_goal_gap(obj: TransportObject) -> float:
    """Distance from the goal to the object body (0 when the goal is
    covered by the object)."""
    poly = obj.world_polygon()
    if poly.contains(obj.goal):
        return 0.0
    _, dist, _ = closest_point_on_polygon(obj.goal, poly)
    return dist


def is_terminated(
    world: WorldState, senseparams: SensorParams, tick_limit: Optional[int] = None
) -> Status:
    """Success when the object body is within the stop radius of the final
    goal; Timeout at the tick limit; Running otherwise.

    The gap (nearest boundary point) is the stop metric rather than the
    centroid: a goal close enough to be covered by the object would be
    occluded from every direction at once, deadlocking opposed pushers
    before the centroid could ever reach it.
    """
    limit = world.tick_limit if tick_limit is None else tick_limit
    if world.object is not None:
        if (
            object_goal_gap(world.object) < senseparams.goal_stop_radius
            and not world.object.waypoints
        ):
            return Success()
    if world.tick >= limit:
        return Timeout(limit)
    return Running()


def resolve_object_motion(
    obj: TransportObject,
    contacts: list[Contact],
    pparams: PhysicsParams,
    dt: float,
) -> TransportObject:
    """Advance the object one tick from its contact set.

    Pushing speed per contact is the velocity component into the surface;
    the combined drive vector must reach static_start_speed scaled by
    mass/REFERENCE_MASS to start a resting object, and kinetic_keep_speed
    to keep a moving one going. While moving, velocity is the drive scaled
    by REFERENCE_MASS/mass, capped at speed_cap; torque contributions
    about the centroid rotate it when rotation is enabled.
    """
    dx = dy = 0.0
    for c in contacts:
        s = c.robot_velocity.dot(c.inward_normal)
        if s > 0.0:
            dx += s * c.inward_normal.x
            dy += s * c.inward_normal.y
    drive = Vec2(dx, dy)
    drive_mag = drive.norm()

    if not obj.moving:
        threshold = pparams.static_start_speed * (obj.mass / REFERENCE_MASS)
        if drive_mag >= threshold:
            obj.moving = True

    if obj.moving and drive_mag >= pparams.kinetic_keep_speed:
        gain = REFERENCE_MASS / obj.mass
        v = Vec2(drive.x * gain, drive.y * gain)
        speed = v.norm()
        if speed > pparams.speed_cap:
            v = Vec2(v.x * pparams.speed_cap / speed, v.y * pparams.speed_cap / speed)
        obj.velocity = v
        obj.position = apply_kinematics(obj.position, v, dt)
        if pparams.rotation_enabled:
            center = obj.centroid()
            torque = 0.0
            for c in contacts:
                s = c.robot_velocity.dot(c.inward_normal)
                if s > 0.0:
                    arm = c.point - center
                    torque += arm.cross(Vec2(s * c.inward_normal.x, s * c.inward_normal.y))
            omega = torque * (REFERENCE_MASS / obj.mass) * pparams.rot_gain
            obj.angular_velocity = omega
            obj.orientation += omega * dt
        else:
            obj.angular_velocity = 0.0
    else:
        obj.moving = False
        obj.velocity = Vec2(0.0, 0.0)
        obj.angular_velocity = 0.0
    return obj


def _robot_object_contacts(world: WorldState) -> list[Contact]:
    assert world.object is not None
    poly = world.object.world_polygon()
    contacts = []
    for robot in world.robots:
        point, dist, normal = closest_point_on_polygon(robot.position, poly)
        if dist <= robot.radius or poly.contains(robot.position):
            contacts.append(Contact(point, normal, robot.velocity))
    return contacts


def _resolve_robot_overlaps(world: WorldState) -> None:
    robots = world.robots
    for _ in range(_MAX_OVERLAP_PASSES):
        moved = False
        for i in range(len(robots)):
            for j in range(i + 1, len(robots)):
                a, b = robots[i], robots[j]
                d = b.position - a.position
                dist = d.norm()
                min_dist = a.radius + b.radius
                if dist >= min_dist - _OVERLAP_TOL:
                    continue
                if dist < 1e-12:
                    direction = Vec2(1.0, 0.0)
                else:
                    direction = Vec2(d.x / dist, d.y / dist)
                shift = 0.5 * (min_dist - dist)
                a.position = a.position - direction * shift
                b.position = b.position + direction * shift
                moved = True
        if not moved:
            break


def _clamp_robot_to_arena(robot: RobotState, arena: Polygon) -> None:
    point, dist, normal = closest_point_on_polygon(robot.position, arena)
    inside = arena.contains(robot.position)
    if not inside or dist < robot.radius:
        robot.position = point + normal * robot.radius


def _push_robot_out_of_object(robot: RobotState, poly: Polygon) -> None:
    point, dist, normal = closest_point_on_polygon(robot.position, poly)
    if poly.contains(robot.position) or dist < robot.radius:
        robot.position = point - normal * robot.radius


def _clamp_object_to_arena(obj: TransportObject, arena: Polygon) -> None:
    """Translate the object back inside the arena when a vertex crosses a
    wall (walls are rigid; the penetrating motion is cancelled)."""
    for _ in range(4):
        worst_shift = None
        worst_depth = 0.0
        for v in obj.world_polygon().vertices:
            if arena.contains(v):
                continue
            point, dist, normal = closest_point_on_polygon(v, arena)
            if dist > worst_depth:
                worst_depth = dist
                worst_shift = (point - v) + normal * 1e-9
        if worst_shift is None:
            return
        obj.position = obj.position + worst_shift


def _pusher_count(world: WorldState) -> int:
    if world.object is None:
        return 0
    poly = world.object.world_polygon()
    count = 0
    for robot in world.robots:
        if not robot.alive or world.modes.get(robot.id) is not Mode.PUSH:
            continue
        _, dist, _ = closest_point_on_polygon(robot.position, poly)
        if dist <= robot.radius or poly.contains(robot.position):
            count += 1
    return count


def _trigger_due(trigger: Trigger, world: WorldState, pushers: int) -> bool:
    if isinstance(trigger, AtTick):
        return world.tick >= trigger.tick
    if isinstance(trigger, DistanceToGoalBelow):
        if world.object is None:
            return False
        return object_goal_gap(world.object) < trigger.distance
    if isinstance(trigger, PushersAtLeast):
        return pushers >= trigger.count
    raise TypeError(f"unknown trigger {trigger!r}")


def _resolve_event(event: Event, world: WorldState) -> Event:
    if isinstance(event, GoalChange) and event.new_goal is None:
        assert world.object is not None
        c = world.object.centroid()
        away = c - world.object.goal
        n = away.norm()
        direction = Vec2(1.0, 0.0) if n < 1e-12 else Vec2(away.x / n, away.y / n)
        return GoalChange(new_goal=c + direction * event.back_distance)
    if isinstance(event, KillRobots) and event.ids is None:
        if world.object is None:
            return KillRobots(ids=())
        poly = world.object.world_polygon()
        pushing = []
        for robot in world.robots:
            if not robot.alive or world.modes.get(robot.id) is not Mode.PUSH:
                continue
            _, dist, _ = closest_point_on_polygon(robot.position, poly)
            if dist <= robot.radius or poly.contains(robot.position):
                pushing.append(robot.id)
        pushing.sort()
        return KillRobots(ids=tuple(pushing[: event.count]))
    return event


def step(
    world: WorldState,
    eparams: EnergyParams,
    sparams: SamplerParams,
    senseparams: SensorParams,
    physics: Optional[PhysicsParams] = None,
    threads: int = 1,
) -> WorldState:
    """Advance the world one tick in place and return it."""
    if physics is None:
        physics = PhysicsParams()
    cache = build_sense_cache(world)
    alive_robots = [r for r in world.robots if r.alive]

    def sample_one(robot: RobotState):
        data = sense_arrays(world, robot.id, senseparams, cache)
        mode = occlusion_mode(
            data.object_xy[:, 0], data.object_xy[:, 1],
            data.pose_x, data.pose_y, data.goal_x, data.goal_y, eparams.rho,
            data.goal_dist,
        )
        ctx = build_context_arrays(
            data.pose_x, data.pose_y, data.object_xy, data.obstacle_xy,
            data.nbr_rel, data.nbr_vel, mode, eparams, world.dt,
        )
        rng = RngStream(world.seed, robot.id, world.tick)
        normals = rng.normals(sparams.iterations)
        uniforms = rng.uniforms(sparams.iterations)
        vx, vy = _kernels.mh_chain(
            data.vel_x, data.vel_y, normals, uniforms,
            sparams.proposal_sigma, sparams.v_max, sparams.temperature,
            sparams.burn_in, ctx.dt, ctx.obj_rel, ctx.obs_rel, ctx.nbr_rel,
            ctx.nbr_vel, ctx.grad_sx, ctx.grad_sy, ctx.grad_n, ctx.mass,
            ctx.v_max, ctx.pair,
        )
        v = clip_speed(Vec2(float(vx), float(vy)), sparams.v_max)
        return robot.id, mode, v, data.object_xy.shape[0] > 0

    if threads > 1 and len(alive_robots) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(sample_one, alive_robots))
    else:
        outcomes = [sample_one(r) for r in alive_robots]

    sampled: dict[int, Vec2] = {}
    world.modes = {r.id: world.modes.get(r.id, Mode.CIRCULATE) for r in world.robots}
    saw_object = False
    for rid, mode, v, saw in outcomes:
        sampled[rid] = v
        world.modes[rid] = mode
        saw_object = saw_object or saw
    if saw_object and world.object_detected_tick is None:
        world.object_detected_tick = world.tick

    pushers = _pusher_count(world)
    remaining: list[tuple[Trigger, Event]] = []
    for trigger, event in world.events:
        if _trigger_due(trigger, world, pushers):
            inject_event(world, _resolve_event(event, world))
        else:
            remaining.append((trigger, event))
    world.events = remaining

    # Heading commits only at confident speed so that slow transients
    # (standoff corrections, contact squeeze) cannot flip the direction
    # used to order surface points.
    heading_commit_speed = 0.5 * sparams.v_max
    for robot in world.robots:
        if not robot.alive or robot.id not in sampled:
            continue
        v = sampled[robot.id]
        robot.position = apply_kinematics(robot.position, v, world.dt)
        robot.velocity = v
        if v.norm() >= heading_commit_speed:
            robot.last_heading = v.unit()

    _resolve_robot_overlaps(world)
    for robot in world.robots:
        _clamp_robot_to_arena(robot, world.arena)

    if world.object is not None:
        contacts = _robot_object_contacts(world)
        resolve_object_motion(world.object, contacts, physics, world.dt)
        _clamp_object_to_arena(world.object, world.arena)
        poly = world.object.world_polygon()
        for robot in world.robots:
            _push_robot_out_of_object(robot, poly)
        _resolve_robot_overlaps(world)
        for robot in world.robots:
            _clamp_robot_to_arena(robot, world.arena)

    world.tick += 1
    return world
