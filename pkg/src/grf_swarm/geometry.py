"""Minimal 2D primitives for sensing and contact resolution.

Everything here is a pure function on immutable values: vectors, simple
polygons, a signed side-of-line test, ray casting against polygon edges,
and closest-point queries. Polygons are normalized to counterclockwise
order at construction so that "left of an edge" always means "inside".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

# Collinearity tolerance for the side test, in m^2 (cross-product units).
# Safe for double precision at arena scale (a few meters).
EPS_GEOM = 1e-9


class Side(Enum):
    LEFT = 1
    ON = 0
    RIGHT = -1


@dataclass(frozen=True)
class Vec2:
    """Immutable 2D vector (meters or m/s depending on context)."""

    x: float
    y: float

    def __add__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Vec2") -> "Vec2":
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def norm_sq(self) -> float:
        return self.x * self.x + self.y * self.y

    def unit(self) -> "Vec2":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero vector")
        return Vec2(self.x / n, self.y / n)

    def perp(self) -> "Vec2":
        # left-hand perpendicular
        return Vec2(-self.y, self.x)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def _segments_properly_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2) -> bool:
    """True when segments ab and cd cross at an interior point."""
    d1 = (b - a).cross(c - a)
    d2 = (b - a).cross(d - a)
    d3 = (d - c).cross(a - c)
    d4 = (d - c).cross(b - c)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


class Polygon:
    """Simple closed polygon; vertices are stored counterclockwise.

    The constructor reverses clockwise input so downstream code can rely
    on the interior being to the left of every edge.
    """

    def __init__(self, vertices):
        verts = tuple(vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        area2 = 0.0
        for i, v in enumerate(verts):
            w = verts[(i + 1) % len(verts)]
            area2 += v.x * w.y - w.x * v.y
        if area2 == 0.0:
            raise ValueError("polygon has zero area")
        if area2 < 0.0:
            verts = verts[::-1]
            area2 = -area2
        self.vertices: tuple[Vec2, ...] = verts
        self._area = 0.5 * area2
        self._check_simple()

    def _check_simple(self) -> None:
        n = len(self.vertices)
        for i in range(n):
            a, b = self.vertices[i], self.vertices[(i + 1) % n]
            for j in range(i + 1, n):
                # skip edges sharing a vertex
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue
                c, d = self.vertices[j], self.vertices[(j + 1) % n]
                if _segments_properly_intersect(a, b, c, d):
                    raise ValueError("polygon is self-intersecting")

    @property
    def area(self) -> float:
        return self._area

    def centroid(self) -> Vec2:
        cx = cy = 0.0
        for i, v in enumerate(self.vertices):
            w = self.vertices[(i + 1) % len(self.vertices)]
            f = v.x * w.y - w.x * v.y
            cx += (v.x + w.x) * f
            cy += (v.y + w.y) * f
        k = 1.0 / (6.0 * self._area)
        return Vec2(cx * k, cy * k)

    def edges(self):
        n = len(self.vertices)
        for i in range(n):
            yield self.vertices[i], self.vertices[(i + 1) % n]

    def contains(self, p: Vec2) -> bool:
        """Even-odd crossing test; boundary points may land either way."""
        inside = False
        for a, b in self.edges():
            if (a.y > p.y) != (b.y > p.y):
                t = (p.y - a.y) / (b.y - a.y)
                if p.x < a.x + t * (b.x - a.x):
                    inside = not inside
        return inside

    def as_array(self) -> np.ndarray:
        return np.array([(v.x, v.y) for v in self.vertices], dtype=np.float64)

    def translated(self, offset: Vec2) -> "Polygon":
        return Polygon(v + offset for v in self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, Polygon) and self.vertices == other.vertices

    def __repr__(self) -> str:
        return f"Polygon({list(self.vertices)!r})"


def side_of_segment(a: Vec2, b: Vec2, p: Vec2) -> Side:
    """Classify p relative to the directed line through a -> b.

    Returns ON when the cross product magnitude is below EPS_GEOM.
    Raises ValueError for a degenerate (a == b) segment.
    """
    if a.x == b.x and a.y == b.y:
        raise ValueError("degenerate segment: a == b")
    cross = (b - a).cross(p - a)
    if abs(cross) <= EPS_GEOM:
        return Side.ON
    return Side.LEFT if cross > 0.0 else Side.RIGHT


def raycast_polygon(origin: Vec2, direction: Vec2, poly: Polygon) -> Optional[Vec2]:
    """Nearest intersection of the ray origin + t*direction (t >= 0) with
    the polygon boundary, or None when the ray misses entirely.

    direction must be unit length (checked to 1e-9).
    """
    if abs(direction.norm() - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    best_t = math.inf
    for a, b in poly.edges():
        e = b - a
        denom = direction.cross(e)
        w = a - origin
        if abs(denom) < 1e-15:
            # parallel: only collinear overlap can produce a hit
            if abs(direction.cross(w)) < EPS_GEOM:
                for q in (a, b):
                    t = (q - origin).dot(direction)
                    if -1e-12 <= t < best_t:
                        best_t = max(t, 0.0)
            continue
        t = w.cross(e) / denom
        u = w.cross(direction) / denom
        if t >= -1e-12 and -1e-12 <= u <= 1.0 + 1e-12:
            t = max(t, 0.0)
            if t < best_t:
                best_t = t
    if math.isinf(best_t):
        return None
    return origin + direction * best_t


def closest_point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> Vec2:
    e = b - a
    L2 = e.norm_sq()
    if L2 == 0.0:
        return a
    t = (p - a).dot(e) / L2
    t = min(1.0, max(0.0, t))
    return a + e * t


def closest_point_on_polygon(p: Vec2, poly: Polygon) -> tuple[Vec2, float, Vec2]:
    """Closest boundary point to p, its distance, and the inward unit normal
    at that point (pointing into the polygon interior)."""
    best: Vec2 | None = None
    best_d = math.inf
    best_edge: tuple[Vec2, Vec2] | None = None
    for a, b in poly.edges():
        c = closest_point_on_segment(p, a, b)
        d = (c - p).norm()
        if d < best_d:
            best, best_d, best_edge = c, d, (a, b)
    assert best is not None and best_edge is not None
    if best_d > 1e-12:
        n = (best - p) * (1.0 / best_d)
        if poly.contains(p):
            n = -n
    else:
        # p sits on the boundary: fall back to the edge's interior-side
        # normal (interior is left of every CCW edge)
        a, b = best_edge
        n = (b - a).perp().unit()
    return best, best_d, n
