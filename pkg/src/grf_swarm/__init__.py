"""Deterministic 2D swarm simulator with energy-sampling velocity control.

Robots sample their next velocity from a Boltzmann distribution over a
local energy built from pairwise potentials (cohesion, obstacle repulsion,
object attraction) and kinetic consensus terms. The emergent behaviors:
flocking, obstacle avoidance, and cooperative pushing of an object to a
goal.
"""

__version__ = "0.1.0"
