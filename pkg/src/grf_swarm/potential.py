"""Energy terms scored by the velocity sampler.

A candidate velocity is evaluated at the robot's predicted position one
step ahead: attraction/repulsion to detected object, obstacle and
neighbor points through an exp-6 + Coulomb pair potential, kinetic terms
for surface following and velocity consensus, and an incentive to move at
full speed. Lower energy means a more likely velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from ._kernels import R_FLOOR
from .geometry import Vec2
from .sensing import Mode, Perception, gradient_sum

_EMPTY = np.zeros((0, 2), dtype=np.float64)


@dataclass(frozen=True)
class CBParams:
    """Parameters of one pairwise interaction: well depth epsilon at
    distance r0, exp-6 stiffness alpha (> 6), and a signed charge product
    whose sign selects Coulomb attraction (< 0) or repulsion (> 0)."""

    epsilon: float
    r0: float
    alpha: float
    charge_product: float
    eps0: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.r0 <= 0:
            raise ValueError("r0 must be > 0")
        if self.alpha <= 6:
            raise ValueError("alpha must be > 6 to keep a repulsive core")
        if self.eps0 <= 0:
            raise ValueError("eps0 must be > 0")


@dataclass(frozen=True)
class EnergyParams:
    """All constants of the per-robot energy.

    The object interaction's standoff distance depends on the behavior
    mode: delta_push (contact-seeking) replaces the object r0 while
    pushing, delta_circulate while circulating. rho is the left/right
    balance threshold of the occlusion test. group_mass scales every
    kinetic term.

    Obstacle epsilon defaults well below the charge term so walls repel
    monotonically instead of capturing robots in the exp-6 well.
    """

    # Scale calibration: T is fixed at 1, so only energy differences of
    # order 1-10 over the reachable velocity ball influence sampling.
    # group_mass sets the kinetic scale (raw speed deltas are <= v_max =
    # 0.12, squared ~ 0.0144); the object well depth must beat the
    # velocity-consensus drag so robots can break off the ring and press.
    robot_robot: CBParams = field(default_factory=lambda: CBParams(1.0, 0.20, 12.0, -0.5))
    robot_obstacle: CBParams = field(default_factory=lambda: CBParams(0.05, 0.15, 12.0, 0.5))
    robot_object: CBParams = field(default_factory=lambda: CBParams(30.0, 0.15, 12.0, -8.0))
    # The exp-6 form turns attractive again below ~0.3 * r0 (the r^-6 term
    # outruns the exponential). delta_circulate is chosen so that barrier
    # peak (0.045 m) sits inside the robot contact distance: a robot pressed
    # against the object always escapes when it flips back to circulate.
    delta_circulate: float = 0.15
    delta_push: float = 0.03
    # Surface following engages only near the standoff ring; a robot that
    # has merely detected the object from afar must approach it first
    # rather than orbiting at sensing range.
    movearound_range: float = 0.25
    rho: float = 0.4
    group_mass: float = 400.0
    v_max: float = 0.12

    def __post_init__(self):
        if self.robot_robot.charge_product >= 0:
            raise ValueError("robot_robot charge_product must be < 0 (attractive)")
        if self.robot_obstacle.charge_product <= 0:
            raise ValueError("robot_obstacle charge_product must be > 0 (repulsive)")
        if self.robot_object.charge_product >= 0:
            raise ValueError("robot_object charge_product must be < 0 (attractive)")
        if not self.delta_push < self.delta_circulate:
            raise ValueError("delta_push must be < delta_circulate")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        if self.group_mass <= 0:
            raise ValueError("group_mass must be > 0")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")

    def standoff(self, mode: Mode) -> float:
        return self.delta_push if mode is Mode.PUSH else self.delta_circulate


def cb_potential(r: float, p: CBParams) -> float:
    """Pair potential at separation r; equals -epsilon at r0 when the
    charge product is zero. r below R_FLOOR clamps to R_FLOOR; r <= 0 is a
    domain error."""
    if r <= 0:
        raise ValueError("cb_potential requires r > 0")
    return _kernels.cb_phi(r, p.epsilon, p.r0, p.alpha, p.charge_product, p.eps0)


def kinetic_energy(v: Vec2, mass: float) -> float:
    """0.5 * mass * |v|^2."""
    return 0.5 * mass * v.dot(v)


def neighbor_velocity_sum(relative_velocities: Sequence[Vec2]) -> Vec2:
    """Vector sum of neighbor velocities taken relative to the robot;
    empty input sums to zero."""
    sx = sy = 0.0
    for v in relative_velocities:
        sx += v.x
        sy += v.y
    return Vec2(sx, sy)


def movearound_mismatch(ordered_gradients: Sequence[Vec2], candidate_v: Vec2) -> Vec2:
    """Surface-following mismatch: the gradient resultant minus the
    candidate velocity, sum(gradients) - candidate.

    The resultant of consecutive surface differences telescopes to
    last - first ordered point, so minimizing the mismatch drives the
    candidate along the visible arc in the chosen circulation direction
    (clipping to the speed ball caps it at full speed)."""
    sx = sy = 0.0
    for g in ordered_gradients:
        sx += g.x
        sy += g.y
    return Vec2(sx - candidate_v.x, sy - candidate_v.y)


@dataclass
class EnergyContext:
    """Arrays for one robot's frozen perception, shaped for the compiled
    energy kernel. Point sets are relative to the robot position."""

    dt: float
    mass: float
    v_max: float
    obj_rel: np.ndarray
    obs_rel: np.ndarray
    nbr_rel: np.ndarray
    nbr_vel: np.ndarray
    grad_sx: float
    grad_sy: float
    grad_n: int
    pair: np.ndarray

    def evaluate(self, vx: float, vy: float) -> float:
        return _kernels.energy(
            vx, vy, self.dt, self.obj_rel, self.obs_rel, self.nbr_rel,
            self.nbr_vel, self.grad_sx, self.grad_sy, self.grad_n,
            self.mass, self.v_max, self.pair,
        )


def build_context_arrays(
    pose_x: float,
    pose_y: float,
    object_xy: np.ndarray,
    obstacle_xy: np.ndarray,
    nbr_rel: np.ndarray,
    nbr_vel: np.ndarray,
    mode: Mode,
    params: EnergyParams,
    dt: float,
) -> EnergyContext:
    """Array-level context assembly; object_xy must be in circular order."""
    obj_rel = object_xy - (pose_x, pose_y) if object_xy.shape[0] else _EMPTY
    obs_rel = obstacle_xy - (pose_x, pose_y) if obstacle_xy.shape[0] else _EMPTY

    # The surface-following term only drives circulation and only once the
    # robot is near the standoff ring; while pushing, ramming the object
    # must not be penalized for ignoring the surface direction, and on
    # approach the attraction must not be overridden by premature orbiting.
    grad_sx = grad_sy = 0.0
    grad_n = 0
    if mode is Mode.CIRCULATE and object_xy.shape[0] > 0:
        near = float(np.min(np.hypot(obj_rel[:, 0], obj_rel[:, 1])))
        if near <= params.movearound_range:
            grad_sx, grad_sy, grad_n = gradient_sum(object_xy)

    obj = params.robot_object
    obs = params.robot_obstacle
    rr = params.robot_robot
    pair = np.array(
        [
            [obj.epsilon, params.standoff(mode), obj.alpha, obj.charge_product, obj.eps0],
            [obs.epsilon, obs.r0, obs.alpha, obs.charge_product, obs.eps0],
            [rr.epsilon, rr.r0, rr.alpha, rr.charge_product, rr.eps0],
        ],
        dtype=np.float64,
    )
    return EnergyContext(
        dt=dt,
        mass=params.group_mass,
        v_max=params.v_max,
        obj_rel=obj_rel,
        obs_rel=obs_rel,
        nbr_rel=nbr_rel,
        nbr_vel=nbr_vel,
        grad_sx=float(grad_sx),
        grad_sy=float(grad_sy),
        grad_n=grad_n,
        pair=pair,
    )


def build_context(
    perception: Perception, mode: Mode, params: EnergyParams, dt: float
) -> EnergyContext:
    pose = perception.self_pose
    object_xy = (
        np.array([(p.x, p.y) for p in perception.object_points])
        if perception.object_points
        else _EMPTY
    )
    obstacle_xy = (
        np.array([(p.x, p.y) for p in perception.obstacle_points])
        if perception.obstacle_points
        else _EMPTY
    )
    if perception.neighbors:
        nbr_rel = np.array([(rp.x, rp.y) for rp, _ in perception.neighbors])
        nbr_vel = np.array([(v.x, v.y) for _, v in perception.neighbors])
    else:
        nbr_rel = _EMPTY
        nbr_vel = _EMPTY
    return build_context_arrays(
        pose.x, pose.y, object_xy, obstacle_xy, nbr_rel, nbr_vel, mode, params, dt
    )


def total_energy(
    candidate_v: Vec2,
    perception: Perception,
    mode: Mode,
    params: EnergyParams,
    dt: float,
) -> float:
    """Energy of a candidate velocity against one frozen perception.

    Sums the object, obstacle and neighbor pair potentials evaluated at
    the predicted position after dt, the surface-following mismatch
    (circulate mode only), the velocity-consensus kinetic term
    0.5 * m * |sum(neighbor velocities) - candidate|^2 when neighbors
    exist, and the speed-deficit incentive 0.5 * m * (v_max - |v|)^2.
    """
    return build_context(perception, mode, params, dt).evaluate(candidate_v.x, candidate_v.y)
