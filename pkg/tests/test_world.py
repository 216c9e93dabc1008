"""Unit tests for world state, events, physics, and stepping."""

import copy

import numpy as np
import pytest

from grf_swarm.geometry import Polygon, Vec2, closest_point_on_polygon
from grf_swarm.potential import EnergyParams
from grf_swarm.sampler import SamplerParams
from grf_swarm.sensing import SensorParams
from grf_swarm.world import (
    AtTick,
    Contact,
    DistanceToGoalBelow,
    GoalChange,
    KillRobots,
    NextWaypoint,
    PhysicsParams,
    RobotState,
    Running,
    Success,
    Timeout,
    TransportObject,
    WorldState,
    apply_kinematics,
    inject_event,
    is_terminated,
    resolve_object_motion,
    step,
)


def arena(half=2.0):
    return Polygon([Vec2(-half, -half), Vec2(half, -half), Vec2(half, half), Vec2(-half, half)])


def rect_object(cx=0.0, cy=0.0, goal=Vec2(1.7, 0), mass=0.2, waypoints=()):
    shape = Polygon([Vec2(-0.25, -0.2), Vec2(0.25, -0.2), Vec2(0.25, 0.2), Vec2(-0.25, 0.2)])
    return TransportObject(shape=shape, position=Vec2(cx, cy), orientation=0.0,
                           mass=mass, goal=goal, waypoints=tuple(waypoints))


class TestApplyKinematics:
    def test_basic(self):
        assert apply_kinematics(Vec2(0, 0), Vec2(0.1, 0), 1.0) == Vec2(0.1, 0)

    def test_zero_velocity_identity(self):
        assert apply_kinematics(Vec2(3, -2), Vec2(0, 0), 0.1) == Vec2(3, -2)

    def test_arithmetic(self):
        out = apply_kinematics(Vec2(1, 1), Vec2(-0.12, 0.05), 0.1)
        assert abs(out.x - 0.988) < 1e-12 and abs(out.y - 1.005) < 1e-12

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            apply_kinematics(Vec2(0, 0), Vec2(1, 0), 0.0)


class TestResolveObjectMotion:
    def test_no_contacts_at_rest_unchanged(self):
        obj = rect_object()
        before = (obj.position, obj.orientation)
        resolve_object_motion(obj, [], PhysicsParams(), 0.1)
        assert (obj.position, obj.orientation) == before
        assert not obj.moving

    def test_single_head_on_push_starts(self):
        obj = rect_object()
        c = Contact(point=Vec2(-0.25, 0), inward_normal=Vec2(1, 0),
                    robot_velocity=Vec2(0.12, 0))
        resolve_object_motion(obj, [c], PhysicsParams(), 0.1)
        assert obj.moving
        assert abs(obj.velocity.norm() - 0.12) < 1e-12
        assert abs(obj.position.x - 0.012) < 1e-12

    def test_slow_push_does_not_start(self):
        obj = rect_object()
        c = Contact(point=Vec2(-0.25, 0), inward_normal=Vec2(1, 0),
                    robot_velocity=Vec2(0.05, 0))
        resolve_object_motion(obj, [c], PhysicsParams(), 0.1)
        assert not obj.moving
        assert obj.position == Vec2(0, 0)

    def test_opposing_pushes_cancel(self):
        obj = rect_object()
        contacts = [
            Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.12, 0)),
            Contact(Vec2(0.25, 0), Vec2(-1, 0), Vec2(-0.12, 0)),
        ]
        resolve_object_motion(obj, contacts, PhysicsParams(), 0.1)
        assert obj.position == Vec2(0, 0)
        assert obj.velocity == Vec2(0, 0)

    def test_doubled_mass_needs_combined_drive(self):
        obj = rect_object(mass=0.4)
        single = Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.12, 0))
        resolve_object_motion(obj, [single], PhysicsParams(), 0.1)
        assert not obj.moving
        pair = [
            Contact(Vec2(-0.25, 0.05), Vec2(1, 0), Vec2(0.12, 0)),
            Contact(Vec2(-0.25, -0.05), Vec2(1, 0), Vec2(0.12, 0)),
        ]
        resolve_object_motion(obj, pair, PhysicsParams(), 0.1)
        assert obj.moving
        # drive 0.24 scaled by 0.2/0.4 -> 0.12
        assert abs(obj.velocity.x - 0.12) < 1e-12

    def test_moving_object_stops_below_keep_threshold(self):
        obj = rect_object()
        obj.moving = True
        obj.velocity = Vec2(0.1, 0)
        weak = Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.005, 0))
        resolve_object_motion(obj, [weak], PhysicsParams(), 0.1)
        assert not obj.moving
        assert obj.velocity == Vec2(0, 0)

    def test_moving_object_keeps_going_above_keep_threshold(self):
        obj = rect_object()
        obj.moving = True
        weak = Contact(Vec2(-0.25, 0), Vec2(1, 0), Vec2(0.05, 0))
        resolve_object_motion(obj, [weak], PhysicsParams(), 0.1)
        assert obj.moving
        assert abs(obj.velocity.x - 0.05) < 1e-12

    def test_off_center_push_rotates(self):
        obj = rect_object()
        c = Contact(point=Vec2(-0.25, 0.15), inward_normal=Vec2(1, 0),
                    robot_velocity=Vec2(0.12, 0))
        resolve_object_motion(obj, [c], PhysicsParams(), 0.1)
        assert obj.angular_velocity != 0.0
        obj2 = rect_object()
        resolve_object_motion(obj2, [Contact(Vec2(-0.25, 0.15), Vec2(1, 0), Vec2(0.12, 0))],
                              PhysicsParams(rotation_enabled=False), 0.1)
        assert obj2.angular_velocity == 0.0
        assert obj2.orientation == 0.0

    def test_speed_cap(self):
        obj = rect_object()
        contacts = [
            Contact(Vec2(-0.25, y), Vec2(1, 0), Vec2(0.12, 0)) for y in (-0.1, 0.0, 0.1)
        ]
        resolve_object_motion(obj, contacts, PhysicsParams(), 0.1)
        assert obj.velocity.norm() <= 0.12 + 1e-12

    def test_params_validation(self):
        with pytest.raises(ValueError):
            PhysicsParams(static_start_speed=0.01, kinetic_keep_speed=0.02)


class TestEvents:
    def world_with_robots(self, n=10):
        robots = [RobotState(id=i, position=Vec2(-1.5 + 0.2 * i, -1.5)) for i in range(n)]
        return WorldState(robots=robots, arena=arena(), object=rect_object())

    def test_kill_robots(self):
        w = self.world_with_robots(10)
        inject_event(w, KillRobots(ids=(1, 2, 3, 4)))
        assert sum(r.alive for r in w.robots) == 6
        for rid in (1, 2, 3, 4):
            r = w.robot_by_id(rid)
            assert not r.alive and r.velocity == Vec2(0, 0)

    def test_kill_unknown_robot_raises(self):
        w = self.world_with_robots(3)
        with pytest.raises(ValueError):
            inject_event(w, KillRobots(ids=(99,)))

    def test_goal_change(self):
        w = self.world_with_robots(2)
        inject_event(w, GoalChange(new_goal=Vec2(-1.0, 0.5)))
        assert w.object.goal == Vec2(-1.0, 0.5)

    def test_next_waypoint_advances_and_saturates(self):
        w = self.world_with_robots(1)
        w.object.waypoints = (Vec2(1, 1), Vec2(-1, 1))
        inject_event(w, NextWaypoint())
        assert w.object.goal == Vec2(1, 1)
        assert w.object.waypoints == (Vec2(-1, 1),)
        inject_event(w, NextWaypoint())
        inject_event(w, NextWaypoint())  # at list end: no-op
        assert w.object.goal == Vec2(-1, 1)
        assert w.object.waypoints == ()

    def test_unresolved_kill_rejected(self):
        w = self.world_with_robots(2)
        with pytest.raises(ValueError):
            inject_event(w, KillRobots(ids=None, count=2))

    def test_at_tick_trigger_fires_once(self):
        w = self.world_with_robots(2)
        w.events = [(AtTick(tick=1), GoalChange(new_goal=Vec2(0.5, 0.5)))]
        ep, sp, sn = EnergyParams(), SamplerParams(iterations=4, burn_in=2), SensorParams()
        step(w, ep, sp, sn)
        assert w.object.goal == Vec2(1.7, 0)  # tick 0 < 1: not yet
        step(w, ep, sp, sn)
        assert w.object.goal == Vec2(0.5, 0.5)
        assert w.events == []

    def test_distance_trigger(self):
        w = self.world_with_robots(2)
        w.object.position = Vec2(0.5, 0)  # 1.2 m from the goal
        w.events = [(DistanceToGoalBelow(1.3), GoalChange(new_goal=Vec2(-1, 0)))]
        ep, sp, sn = EnergyParams(), SamplerParams(iterations=4, burn_in=2), SensorParams()
        step(w, ep, sp, sn)
        assert w.object.goal == Vec2(-1, 0)


class TestIsTerminated:
    def test_success_inside_stop_radius(self):
        w = WorldState(robots=[], arena=arena(), object=rect_object(cx=1.65, goal=Vec2(1.7, 0)))
        assert is_terminated(w, SensorParams()) == Success()

    def test_running(self):
        w = WorldState(robots=[], arena=arena(), object=rect_object(cx=1.2, goal=Vec2(1.7, 0)))
        assert isinstance(is_terminated(w, SensorParams()), Running)

    def test_timeout_boundary(self):
        w = WorldState(robots=[], arena=arena(), object=rect_object(), tick=500, tick_limit=500)
        assert is_terminated(w, SensorParams()) == Timeout(500)

    def test_waypoints_block_success(self):
        obj = rect_object(cx=1.65, goal=Vec2(1.7, 0), waypoints=[Vec2(-1, 0)])
        w = WorldState(robots=[], arena=arena(), object=obj)
        assert isinstance(is_terminated(w, SensorParams()), Running)


class TestStep:
    def params(self):
        return EnergyParams(), SamplerParams(), SensorParams()

    def test_all_dead_world_only_ticks(self):
        robots = [RobotState(id=i, position=Vec2(-1 + 0.3 * i, 0), alive=False) for i in range(3)]
        w = WorldState(robots=robots, arena=arena(), object=rect_object())
        before = [(r.position.x, r.position.y) for r in w.robots]
        ep, sp, sn = self.params()
        step(w, ep, sp, sn)
        assert w.tick == 1
        assert [(r.position.x, r.position.y) for r in w.robots] == before
        assert w.object.position == Vec2(0, 0)

    def test_forced_push_moves_object(self):
        # robot pressed against the back face moving at contact speed
        r = RobotState(id=0, position=Vec2(-0.305, 0), velocity=Vec2(0.12, 0))
        w = WorldState(robots=[r], arena=arena(), object=rect_object(), seed=5)
        ep, sp, sn = self.params()
        moved = 0.0
        for _ in range(5):
            step(w, ep, sp, sn)
            moved = w.object.position.x
        assert moved > 0.0

    def test_object_never_moves_without_contact(self):
        r = RobotState(id=0, position=Vec2(-1.5, 0))
        w = WorldState(robots=[r], arena=arena(), object=rect_object(), seed=2)
        ep, sp, sn = self.params()
        for _ in range(30):
            step(w, ep, sp, sn)
        assert w.object.position == Vec2(0, 0)
        assert w.object.orientation == 0.0

    def test_robots_stay_inside_arena(self):
        rng = np.random.default_rng(0)
        robots = [
            RobotState(id=i, position=Vec2(float(x), float(y)))
            for i, (x, y) in enumerate(rng.uniform(-1.8, 1.8, (8, 2)))
        ]
        w = WorldState(robots=robots, arena=arena(), object=rect_object(), seed=11)
        ep, sp, sn = self.params()
        for _ in range(80):
            step(w, ep, sp, sn)
            for r in w.robots:
                _, d, _ = closest_point_on_polygon(r.position, w.arena)
                assert w.arena.contains(r.position)
                assert d >= r.radius - 1e-6

    def test_robots_never_overlap_after_step(self):
        robots = [RobotState(id=i, position=Vec2(-0.5 + 0.02 * i, 0.0)) for i in range(6)]
        w = WorldState(robots=robots, arena=arena(), seed=3)
        ep, sp, sn = self.params()
        for _ in range(30):
            step(w, ep, sp, sn)
            for i in range(len(robots)):
                for j in range(i + 1, len(robots)):
                    d = (robots[i].position - robots[j].position).norm()
                    assert d >= robots[i].radius + robots[j].radius - 1e-6

    def test_determinism_across_thread_counts(self):
        def run(threads):
            robots = [RobotState(id=i, position=Vec2(-1.0 + 0.3 * i, 0.2 * i)) for i in range(6)]
            w = WorldState(robots=robots, arena=arena(), object=rect_object(), seed=77)
            ep, sp, sn = self.params()
            for _ in range(25):
                step(w, ep, sp, sn, threads=threads)
            return [(r.position.x, r.position.y, r.velocity.x, r.velocity.y) for r in w.robots]

        assert run(1) == run(4)

    def test_killed_mid_run_robots_freeze(self):
        robots = [RobotState(id=i, position=Vec2(-1.0 + 0.3 * i, 0)) for i in range(4)]
        w = WorldState(robots=robots, arena=arena(), object=rect_object(), seed=9,
                       events=[(AtTick(tick=5), KillRobots(ids=(0, 1)))])
        ep, sp, sn = self.params()
        for _ in range(6):
            step(w, ep, sp, sn)
        frozen = [(w.robot_by_id(0).position.x, w.robot_by_id(0).position.y)]
        for _ in range(5):
            step(w, ep, sp, sn)
        assert not w.robot_by_id(0).alive
        assert w.robot_by_id(0).velocity == Vec2(0, 0)
        assert (w.robot_by_id(0).position.x, w.robot_by_id(0).position.y) == frozen[0]
