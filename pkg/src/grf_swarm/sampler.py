"""Metropolis-Hastings velocity sampling.

Each robot, once per tick, runs a short Metropolis random walk over
candidate velocities inside the speed ball, scored by the energy of its
frozen perception, and adopts the mean of the post-burn-in chain. A small
exact-enumeration helper exposes the target Boltzmann distribution over a
finite candidate set for testing.

Randomness is drawn from streams keyed by (global_seed, robot_id, tick)
so results are independent of scheduling and thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Vec2
from .potential import EnergyParams, build_context
from .sensing import Mode, Perception


@dataclass(frozen=True)
class SamplerParams:
    """Chain knobs: temperature, iteration count, burn-in, isotropic
    Gaussian proposal spread, and the speed ball radius."""

    temperature: float = 1.0
    iterations: int = 150
    burn_in: int = 75
    proposal_sigma: float = 0.03
    v_max: float = 0.12

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.proposal_sigma <= 0:
            raise ValueError("proposal_sigma must be > 0")
        if self.v_max <= 0:
            raise ValueError("v_max must be > 0")


class RngStream:
    """Deterministic random stream keyed by (global_seed, robot_id, tick).

    Backed by PCG64 seeded through a SeedSequence spawn key, so identical
    keys always reproduce identical draw sequences, on any platform and
    from any thread. sample_velocity draws one (iterations, 2) block of
    standard normals followed by one (iterations,) block of uniforms.
    """

    def __init__(self, global_seed: int, robot_id: int, tick: int):
        self.key = (global_seed, robot_id, tick)
        ss = np.random.SeedSequence(entropy=global_seed, spawn_key=(robot_id, tick))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def normals(self, n: int) -> np.ndarray:
        return self._gen.standard_normal((n, 2))

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)


def clip_speed(v: Vec2, v_max: float) -> Vec2:
    s = v.norm()
    if s > v_max:
        return Vec2(v.x * v_max / s, v.y * v_max / s)
    return v


def propose(current_v: Vec2, params: SamplerParams, rng: RngStream) -> Vec2:
    """One Gaussian proposal around the current velocity, radially clipped
    to the speed ball."""
    step = rng.normals(1)[0]
    cand = Vec2(
        current_v.x + params.proposal_sigma * float(step[0]),
        current_v.y + params.proposal_sigma * float(step[1]),
    )
    return clip_speed(cand, params.v_max)


def sample_velocity(
    perception: Perception,
    mode: Mode,
    eparams: EnergyParams,
    sparams: SamplerParams,
    dt: float,
    rng: RngStream,
) -> Vec2:
    """Next-tick velocity for one robot.

    Runs `iterations` Metropolis steps seeded at the current velocity,
    proposing Gaussian candidates around that same tick-start velocity:
    accept when the energy drops or with probability e^(-dE) otherwise,
    and return the arithmetic mean of the chain states at iterations
    burn_in+1..iterations, clipped to the speed ball. The fixed proposal
    center tilts the sampled law toward the current velocity, which acts
    as command smoothing across ticks.
    """
    ctx = build_context(perception, mode, eparams, dt)
    normals = rng.normals(sparams.iterations)
    uniforms = rng.uniforms(sparams.iterations)
    vx, vy = _kernels.mh_chain(
        perception.self_velocity.x,
        perception.self_velocity.y,
        normals,
        uniforms,
        sparams.proposal_sigma,
        sparams.v_max,
        sparams.temperature,
        sparams.burn_in,
        ctx.dt,
        ctx.obj_rel,
        ctx.obs_rel,
        ctx.nbr_rel,
        ctx.nbr_vel,
        ctx.grad_sx,
        ctx.grad_sy,
        ctx.grad_n,
        ctx.mass,
        ctx.v_max,
        ctx.pair,
    )
    return clip_speed(Vec2(float(vx), float(vy)), sparams.v_max)


def gibbs_probability(
    candidate_index: int,
    candidates: list[Vec2],
    perception: Perception,
    mode: Mode,
    eparams: EnergyParams,
    sparams: SamplerParams,
    dt: float,
) -> float:
    """Boltzmann probability of one candidate within a finite velocity set:
    e^(-H_k/T) / sum_j e^(-H_j/T), computed with max-subtraction."""
    if not candidates:
        raise ValueError("candidates must be nonempty")
    if not 0 <= candidate_index < len(candidates):
        raise IndexError(f"candidate_index {candidate_index} out of range")
    ctx = build_context(perception, mode, eparams, dt)
    logw = np.array(
        [-ctx.evaluate(c.x, c.y) / sparams.temperature for c in candidates]
    )
    logw -= logw.max()
    w = np.exp(logw)
    return float(w[candidate_index] / w.sum())
