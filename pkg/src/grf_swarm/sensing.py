"""Per-robot perception: beam-based object/obstacle detection, neighbor
discovery, surface point ordering, and the push/circulate decision.

Sensing is noise-free by assumption: beams report exact hit points on the
nearest shape and label them by ground-truth identity; neighbors within
the sensing radius are reported with exact relative position and
velocity. A robot never senses itself, dead robots, or anything beyond
the sensing radius.

The numeric rules live in array-level helpers shared by the public
(Vec2-based) functions and the simulator's hot loop, so both paths
produce bit-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from . import _kernels
from .geometry import EPS_GEOM, Vec2

if TYPE_CHECKING:  # pragma: no cover
    from .world import WorldState


class Mode(Enum):
    PUSH = "push"
    CIRCULATE = "circulate"


@dataclass(frozen=True)
class SensorParams:
    """Sensing knobs: radius of the circular range, number of beams cast
    uniformly over [0, 2pi), and the stop radius for goal arrival."""

    sensing_radius: float = 0.5
    beam_count: int = 72
    goal_stop_radius: float = 0.1

    def __post_init__(self):
        if self.sensing_radius <= 0:
            raise ValueError("sensing_radius must be > 0")
        if self.beam_count < 8:
            raise ValueError("beam_count must be >= 8")
        if self.goal_stop_radius <= 0:
            raise ValueError("goal_stop_radius must be > 0")


@dataclass(frozen=True)
class Perception:
    """One robot's frozen snapshot for a single tick.

    neighbors holds (relative position, velocity) pairs for alive robots
    in range. object_points come back ordered for circulation (see
    order_object_points); obstacle_points are unordered beam hits.
    """

    self_pose: Vec2
    self_velocity: Vec2
    goal_bearing: Vec2
    neighbors: tuple[tuple[Vec2, Vec2], ...] = ()
    object_points: tuple[Vec2, ...] = ()
    obstacle_points: tuple[Vec2, ...] = ()
    goal_distance: float = math.inf


@dataclass
class SenseData:
    """Array form of a Perception, consumed by the simulator hot loop.
    object_xy is already in circular order."""

    pose_x: float
    pose_y: float
    vel_x: float
    vel_y: float
    goal_x: float
    goal_y: float
    goal_dist: float
    object_xy: np.ndarray  # (k, 2) world frame, ordered
    obstacle_xy: np.ndarray  # (m, 2) world frame
    nbr_rel: np.ndarray  # (j, 2) relative positions
    nbr_vel: np.ndarray  # (j, 2) velocities


_EMPTY = np.zeros((0, 2), dtype=np.float64)


def goal_bearing(self_pose: Vec2, goal: Vec2) -> Vec2:
    """Unit vector from the robot toward the goal."""
    d = goal - self_pose
    n = d.norm()
    if n < 1e-12:
        raise ValueError("goal coincides with the robot pose")
    return Vec2(d.x / n, d.y / n)


def surface_gradient(ordered_points: Sequence[Vec2]) -> list[Vec2]:
    """Consecutive differences along the ordered surface points; empty for
    fewer than 2 points."""
    if len(ordered_points) < 2:
        return []
    return [b - a for a, b in zip(ordered_points, ordered_points[1:])]


def gradient_sum(ordered_xy: np.ndarray) -> tuple[float, float, int]:
    """Sequential sum of consecutive differences along ordered points;
    (0, 0, 0) for fewer than 2 points."""
    k = ordered_xy.shape[0]
    if k < 2:
        return 0.0, 0.0, 0
    sx = sy = 0.0
    for i in range(k - 1):
        sx += ordered_xy[i + 1, 0] - ordered_xy[i, 0]
        sy += ordered_xy[i + 1, 1] - ordered_xy[i, 1]
    return sx, sy, k - 1


def _side_counts(
    pxs: np.ndarray,
    pys: np.ndarray,
    origin_x: float,
    origin_y: float,
    dir_x: float,
    dir_y: float,
    ahead_only: bool,
    max_projection: float = math.inf,
) -> tuple[int, int]:
    """Count points strictly left/right of the directed line through the
    origin; the ON band (|cross| <= EPS_GEOM) counts for neither side.
    With ahead_only, points at nonpositive projection on the direction are
    skipped, as are points projecting beyond max_projection. Mirrors
    side_of_segment's arithmetic exactly."""
    ex = (origin_x + dir_x) - origin_x
    ey = (origin_y + dir_y) - origin_y
    rx = pxs - origin_x
    ry = pys - origin_y
    cross = ex * ry - ey * rx
    if ahead_only:
        proj = rx * ex + ry * ey
        keep = (proj > 0.0) & (proj < max_projection)
    else:
        keep = np.ones(len(pxs), dtype=bool)
    left = int(np.count_nonzero(keep & (cross > EPS_GEOM)))
    right = int(np.count_nonzero(keep & (cross < -EPS_GEOM)))
    return left, right


def angular_order(
    pxs: np.ndarray, pys: np.ndarray, cx: float, cy: float, clockwise: bool
) -> np.ndarray:
    """Index permutation ordering points by angle around (cx, cy).

    Counterclockwise order is ascending angle started just after the
    widest circular gap, keeping a visible arc contiguous from first to
    last; clockwise is its reverse. Ties break by distance, then input
    index.
    """
    n = len(pxs)
    angles = np.arctan2(pys - cy, pxs - cx)
    d2 = (pxs - cx) ** 2 + (pys - cy) ** 2
    order = np.lexsort((np.arange(n), d2, angles))
    sorted_ang = angles[order]
    gaps = np.mod(np.roll(sorted_ang, -1) - sorted_ang, 2.0 * np.pi)
    start = (int(np.argmax(gaps)) + 1) % n
    ccw = np.roll(order, -start)
    return ccw[::-1] if clockwise else ccw


def order_object_points(
    object_points: Sequence[Vec2], self_pose: Vec2, motion_dir: Vec2
) -> list[Vec2]:
    """Order detected surface points around the robot for circulation.

    Counts points left and right of the line along motion_dir: strictly
    more on the left sorts clockwise, otherwise counterclockwise.
    """
    pts = list(object_points)
    if len(pts) < 2:
        return pts
    pxs = np.array([p.x for p in pts])
    pys = np.array([p.y for p in pts])
    left, right = _side_counts(
        pxs, pys, self_pose.x, self_pose.y, motion_dir.x, motion_dir.y, ahead_only=False
    )
    idx = angular_order(pxs, pys, self_pose.x, self_pose.y, clockwise=left > right)
    return [pts[i] for i in idx]


def occlusion_mode(
    pxs: np.ndarray,
    pys: np.ndarray,
    pose_x: float,
    pose_y: float,
    goal_dir_x: float,
    goal_dir_y: float,
    rho: float,
    goal_distance: float = math.inf,
) -> Mode:
    """Array core of the push/circulate decision."""
    if len(pxs) == 0:
        return Mode.CIRCULATE
    left, right = _side_counts(
        pxs, pys, pose_x, pose_y, goal_dir_x, goal_dir_y,
        ahead_only=True, max_projection=goal_distance,
    )
    if left > 0 and right > 0 and min(left, right) / max(left, right) >= rho:
        return Mode.PUSH
    return Mode.CIRCULATE


def pushing_decision(
    object_points: Sequence[Vec2],
    self_pose: Vec2,
    goal_bearing: Vec2,
    rho: float,
    goal_distance: float = math.inf,
) -> Mode:
    """Occlusion test: push only when the detected object straddles the
    line of sight to the goal with balanced left/right counts.

    Only points that can actually block the goal count as occluders:
    ahead of the robot (positive projection on goal_bearing) and, when
    goal_distance is known, nearer than the goal itself. Points within
    the ON band of the goal line count for neither side. Push iff both
    sides are occupied and min(L, R) / max(L, R) >= rho.
    """
    if not object_points:
        return Mode.CIRCULATE
    pxs = np.array([p.x for p in object_points])
    pys = np.array([p.y for p in object_points])
    return occlusion_mode(
        pxs, pys, self_pose.x, self_pose.y, goal_bearing.x, goal_bearing.y,
        rho, goal_distance,
    )


@dataclass
class SenseCache:
    """Per-tick segment soup shared by every robot's beam casting."""

    segs: np.ndarray  # (S, 4): ax, ay, bx, by
    labels: np.ndarray  # (S,), 0 = object, 1 = obstacle


def build_sense_cache(world: "WorldState") -> SenseCache:
    segs: list[tuple[float, float, float, float]] = []
    labels: list[int] = []

    def add(poly, label):
        for a, b in poly.edges():
            segs.append((a.x, a.y, b.x, b.y))
            labels.append(label)

    if world.object is not None:
        add(world.object.world_polygon(), 0)
    for obs in world.obstacles:
        add(obs, 1)
    add(world.arena, 1)
    if not segs:
        return SenseCache(np.zeros((0, 4)), np.zeros(0, dtype=np.int64))
    return SenseCache(np.array(segs, dtype=np.float64), np.array(labels, dtype=np.int64))


def sense_arrays(
    world: "WorldState",
    robot_id: int,
    params: SensorParams,
    cache: Optional[SenseCache] = None,
) -> SenseData:
    """Array-level sensing for one alive robot (hot path)."""
    robot = world.robot_by_id(robot_id)
    if not robot.alive:
        raise ValueError(f"robot {robot_id} is not alive")
    if cache is None:
        cache = build_sense_cache(world)

    ox = robot.position.x
    oy = robot.position.y
    goal_dist = math.inf
    if world.object is not None:
        gx = world.object.goal.x - ox
        gy = world.object.goal.y - oy
        gn = (gx * gx + gy * gy) ** 0.5
        if gn < 1e-12:
            gx, gy = 1.0, 0.0
        else:
            gx, gy = gx / gn, gy / gn
            goal_dist = gn
    else:
        gx, gy = 1.0, 0.0

    if cache.segs.shape[0] > 0:
        hx, hy, lab, ok = _kernels.cast_beams(
            ox, oy, params.beam_count, cache.segs, cache.labels, params.sensing_radius
        )
        hit = ok == 1
        obj_mask = hit & (lab == 0)
        obs_mask = hit & (lab == 1)
        object_xy = np.column_stack((hx[obj_mask], hy[obj_mask]))
        obstacle_xy = np.column_stack((hx[obs_mask], hy[obs_mask]))
    else:
        object_xy = _EMPTY
        obstacle_xy = _EMPTY

    nbr_rel_rows = []
    nbr_vel_rows = []
    for other in world.robots:
        if other.id == robot_id or not other.alive:
            continue
        rx = other.position.x - ox
        ry = other.position.y - oy
        if (rx * rx + ry * ry) ** 0.5 <= params.sensing_radius:
            nbr_rel_rows.append((rx, ry))
            nbr_vel_rows.append((other.velocity.x, other.velocity.y))
    nbr_rel = np.array(nbr_rel_rows) if nbr_rel_rows else _EMPTY
    nbr_vel = np.array(nbr_vel_rows) if nbr_vel_rows else _EMPTY

    if object_xy.shape[0] >= 2:
        # the committed heading, not the instantaneous velocity: transient
        # radial corrections must not flip the circulation direction
        if robot.last_heading is not None:
            mx, my = robot.last_heading.x, robot.last_heading.y
        elif robot.velocity.norm() > 1e-12:
            mx, my = robot.velocity.x / robot.velocity.norm(), robot.velocity.y / robot.velocity.norm()
        else:
            mx, my = gx, gy
        left, right = _side_counts(
            object_xy[:, 0], object_xy[:, 1], ox, oy, mx, my, ahead_only=False
        )
        idx = angular_order(object_xy[:, 0], object_xy[:, 1], ox, oy, clockwise=left > right)
        object_xy = object_xy[idx]

    return SenseData(
        pose_x=ox, pose_y=oy,
        vel_x=robot.velocity.x, vel_y=robot.velocity.y,
        goal_x=gx, goal_y=gy, goal_dist=goal_dist,
        object_xy=object_xy, obstacle_xy=obstacle_xy,
        nbr_rel=nbr_rel, nbr_vel=nbr_vel,
    )


def sense(
    world: "WorldState",
    robot_id: int,
    params: SensorParams,
    cache: Optional[SenseCache] = None,
) -> Perception:
    """Build the Perception snapshot for one alive robot."""
    data = sense_arrays(world, robot_id, params, cache)
    return Perception(
        self_pose=Vec2(data.pose_x, data.pose_y),
        self_velocity=Vec2(data.vel_x, data.vel_y),
        goal_bearing=Vec2(data.goal_x, data.goal_y),
        goal_distance=data.goal_dist,
        neighbors=tuple(
            (Vec2(float(data.nbr_rel[i, 0]), float(data.nbr_rel[i, 1])),
             Vec2(float(data.nbr_vel[i, 0]), float(data.nbr_vel[i, 1])))
            for i in range(data.nbr_rel.shape[0])
        ),
        object_points=tuple(
            Vec2(float(x), float(y)) for x, y in data.object_xy
        ),
        obstacle_points=tuple(
            Vec2(float(x), float(y)) for x, y in data.obstacle_xy
        ),
    )
