"""Unit tests for scenario builders, trial running, and batch statistics."""

import math

import pytest

from grf_swarm.experiments import (
    ScenarioConfig,
    build_scenario,
    mean_ci95,
    object_shape,
    run_batch,
    run_trial,
    world_from_config,
)
from grf_swarm.geometry import Vec2, closest_point_on_polygon
from grf_swarm.world import KillRobots, PushersAtLeast


class TestMeanCI95:
    def test_zero_variance(self):
        assert mean_ci95([5, 5, 5, 5]) == (5.0, 0.0)

    def test_textbook_three_values(self):
        mean, hw = mean_ci95([1, 2, 3])
        assert mean == 2.0
        # t_{0.975,2} * (s=1) / sqrt(3) = 4.302652...  / 1.7320508
        assert abs(hw - 2.4841377117) < 1e-6

    def test_single_value_raises(self):
        with pytest.raises(ValueError):
            mean_ci95([7.0])


class TestObjectShapes:
    def test_equal_areas_at_scale_one(self):
        areas = [object_shape(s).area for s in ("rect", "octagon", "triangle")]
        for a in areas:
            assert abs(a - 0.2) < 1e-9

    def test_scale_doubles_linear_dimensions(self):
        small = object_shape("triangle", 1.0)
        big = object_shape("triangle", 2.0)
        assert abs(big.area - 4 * small.area) < 1e-9

    def test_unknown_shape(self):
        with pytest.raises(ValueError):
            object_shape("hexagon")


class TestBuildScenario:
    def test_scalability_geometry(self):
        cfg = build_scenario("scalability", robots=10)
        assert cfg.robot_count == 10
        assert cfg.object_shape == "rect"
        assert cfg.object_mass == 0.2
        d = math.dist(cfg.object_position, cfg.goal)
        assert abs(d - 1.7) < 1e-12
        rect = object_shape("rect")
        xs = [v.x for v in rect.vertices]
        ys = [v.y for v in rect.vertices]
        assert abs((max(xs) - min(xs)) - 0.5) < 1e-12
        assert abs((max(ys) - min(ys)) - 0.4) < 1e-12

    def test_failure_scenario(self):
        cfg = build_scenario("failure")
        assert cfg.robot_count == 10
        assert abs(math.dist(cfg.object_position, cfg.goal) - 2.6) < 1e-12
        (trigger, event), = cfg.events
        assert isinstance(trigger, PushersAtLeast) and trigger.count == 4
        assert isinstance(event, KillRobots) and event.ids is None and event.count == 4

    def test_robustness_doubled_triangle(self):
        cfg = build_scenario("robustness", shape="triangle", scale=2.0, mass=0.4)
        assert cfg.object_shape == "triangle"
        assert cfg.object_scale == 2.0
        assert cfg.object_mass == 0.4

    def test_invalid_kind_and_params(self):
        with pytest.raises(ValueError):
            build_scenario("warp")
        with pytest.raises(ValueError):
            build_scenario("robustness", scale=3.0)
        with pytest.raises(ValueError):
            build_scenario("scalability", robots=0)


class TestWorldFromConfig:
    def test_robots_in_free_space(self):
        cfg = build_scenario("scalability", robots=15)
        w = world_from_config(cfg, 4)
        assert len(w.robots) == 15
        footprint = w.object.world_polygon()
        for r in w.robots:
            assert w.arena.contains(r.position)
            assert not footprint.contains(r.position)
            _, d, _ = closest_point_on_polygon(r.position, footprint)
            assert d >= r.radius
        for i in range(len(w.robots)):
            for j in range(i + 1, len(w.robots)):
                d = (w.robots[i].position - w.robots[j].position).norm()
                assert d >= 2 * w.robots[i].radius

    def test_placement_deterministic_per_seed(self):
        cfg = build_scenario("scalability", robots=8)
        a = world_from_config(cfg, 11)
        b = world_from_config(cfg, 11)
        c = world_from_config(cfg, 12)
        pa = [(r.position.x, r.position.y) for r in a.robots]
        pb = [(r.position.x, r.position.y) for r in b.robots]
        pc = [(r.position.x, r.position.y) for r in c.robots]
        assert pa == pb
        assert pa != pc

    def test_cohesion_has_no_object(self):
        w = world_from_config(build_scenario("cohesion"), 0)
        assert w.object is None


class TestRunTrial:
    def test_tick_limit_one_gives_timeout(self):
        cfg = build_scenario("scalability", robots=2, tick_limit=1)
        r = run_trial(cfg, 0)
        assert r.outcome == "timeout"
        assert len(r.distance_series) == 1
        assert r.transport_time_s == cfg.dt

    def test_determinism(self):
        cfg = build_scenario("scalability", robots=3, tick_limit=150)
        a = run_trial(cfg, 5)
        b = run_trial(cfg, 5)
        assert a == b

    def test_success_records_detection(self):
        cfg = build_scenario("scalability", robots=10)
        r = run_trial(cfg, 3)
        assert r.outcome == "success"
        assert r.detect_to_goal_s is not None
        assert 0 < r.detect_to_goal_s <= r.transport_time_s


class TestRunBatch:
    def test_mixed_outcomes_success_rate(self):
        cfg = build_scenario("scalability", robots=10, tick_limit=40)
        results, summary = run_batch(cfg, seeds=[0, 1, 2])
        assert summary.success_rate == len(
            [r for r in results if r.outcome == "success"]
        ) / 3
        assert [r.seed for r in results] == [0, 1, 2]

    def test_empty_seeds_rejected(self):
        cfg = build_scenario("scalability", robots=2)
        with pytest.raises(ValueError):
            run_batch(cfg, seeds=[])

    def test_parallel_matches_serial(self):
        cfg = build_scenario("scalability", robots=10)
        serial, s1 = run_batch(cfg, seeds=[3, 5], threads=1)
        parallel, s2 = run_batch(cfg, seeds=[3, 5], threads=2)
        assert serial == parallel
        assert s1 == s2
        assert s1.n == 2  # both seeds must actually succeed


class TestScenarioConfigValidation:
    def test_duplicate_seeds(self):
        with pytest.raises(ValueError):
            ScenarioConfig(name="x", robot_count=2, seeds=(1, 1))

    def test_bad_mass(self):
        with pytest.raises(ValueError):
            ScenarioConfig(name="x", robot_count=2, object_mass=0)
