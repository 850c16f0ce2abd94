"""Planar geometry helpers shared by the world model, navmesh, and planner.

Points are plain ``(x, z)`` tuples in meters. The world is a 2-D plan view:
x grows east, z grows north, angles are radians counter-clockwise from +x.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

Point = tuple[float, float]


def sub(a: Point, b: Point) -> Point:
    return (a[0] - b[0], a[1] - b[1])


def add(a: Point, b: Point) -> Point:
    return (a[0] + b[0], a[1] + b[1])


def scale(a: Point, k: float) -> Point:
    return (a[0] * k, a[1] * k)


def dot(a: Point, b: Point) -> float:
    return a[0] * b[0] + a[1] * b[1]


def cross(a: Point, b: Point) -> float:
    return a[0] * b[1] - a[1] * b[0]


def norm(a: Point) -> float:
    return math.hypot(a[0], a[1])


def dist(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def normalize(a: Point) -> Point:
    n = norm(a)
    if n == 0.0:
        raise ValueError("cannot normalize a zero-length vector")
    return (a[0] / n, a[1] / n)


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def triangle_area2(a: Point, b: Point, c: Point) -> float:
    """Twice the signed area of triangle abc (positive when CCW)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def polygon_area(poly: Sequence[Point]) -> float:
    """Signed area of a polygon (positive when CCW)."""
    total = 0.0
    n = len(poly)
    for i in range(n):
        x0, z0 = poly[i]
        x1, z1 = poly[(i + 1) % n]
        total += x0 * z1 - x1 * z0
    return total * 0.5


def point_in_polygon(p: Point, poly: Sequence[Point]) -> bool:
    """Inclusive point-in-polygon test (boundary counts as inside)."""
    n = len(poly)
    inside = False
    j = n - 1
    for i in range(n):
        xi, zi = poly[i]
        xj, zj = poly[j]
        # On-edge check first so boundary points are never dropped by the
        # ray parity below.
        if _on_segment(p, (xj, zj), (xi, zi)):
            return True
        if (zi > p[1]) != (zj > p[1]):
            t = (p[1] - zi) / (zj - zi)
            x_at = xi + t * (xj - xi)
            if p[0] < x_at:
                inside = not inside
        j = i
    return inside


def _on_segment(p: Point, a: Point, b: Point, eps: float = 1e-12) -> bool:
    if abs(triangle_area2(a, b, p)) > eps * max(1.0, dist(a, b)):
        return False
    return (
        min(a[0], b[0]) - eps <= p[0] <= max(a[0], b[0]) + eps
        and min(a[1], b[1]) - eps <= p[1] <= max(a[1], b[1]) + eps
    )


def closest_point_on_segment(p: Point, a: Point, b: Point) -> Point:
    ab = sub(b, a)
    denom = dot(ab, ab)
    if denom == 0.0:
        return a
    t = dot(sub(p, a), ab) / denom
    t = min(1.0, max(0.0, t))
    return (a[0] + t * ab[0], a[1] + t * ab[1])


def dist_point_segment(p: Point, a: Point, b: Point) -> float:
    return dist(p, closest_point_on_segment(p, a, b))


def closest_point_on_polygon(p: Point, poly: Sequence[Point]) -> Point:
    """Closest point of a convex polygon (interior included) to p."""
    if point_in_polygon(p, poly):
        return p
    best: Point | None = None
    best_d = math.inf
    n = len(poly)
    for i in range(n):
        q = closest_point_on_segment(p, poly[i], poly[(i + 1) % n])
        d = dist(p, q)
        if d < best_d:
            best_d = d
            best = q
    assert best is not None
    return best


def dist_point_polygon(p: Point, poly: Sequence[Point]) -> float:
    """Distance from p to a filled polygon; zero inside."""
    if point_in_polygon(p, poly):
        return 0.0
    return min(
        dist_point_segment(p, poly[i], poly[(i + 1) % len(poly)])
        for i in range(len(poly))
    )


def segment_disc_intersects(a: Point, b: Point, center: Point, radius: float) -> bool:
    return dist_point_segment(center, a, b) < radius


def point_in_triangle(p: Point, a: Point, b: Point, c: Point, eps: float = 1e-9) -> bool:
    """Inclusive containment for a CCW triangle."""
    return (
        triangle_area2(a, b, p) >= -eps
        and triangle_area2(b, c, p) >= -eps
        and triangle_area2(c, a, p) >= -eps
    )


def dist_point_triangle(p: Point, a: Point, b: Point, c: Point) -> float:
    if point_in_triangle(p, a, b, c, eps=0.0):
        return 0.0
    return min(
        dist_point_segment(p, a, b),
        dist_point_segment(p, b, c),
        dist_point_segment(p, c, a),
    )


def convex_hull_is_ccw(poly: Sequence[Point]) -> bool:
    return polygon_area(poly) > 0.0


def polyline_length(points: Iterable[Point]) -> float:
    pts = list(points)
    return sum(dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))


def rotate_into_frame(v: Point, heading: float) -> tuple[float, float]:
    """World vector -> (lateral, forward) components in a robot frame.

    The robot's forward axis points along ``heading``; lateral is positive
    to the robot's right.
    """
    fx, fz = math.cos(heading), math.sin(heading)
    forward = v[0] * fx + v[1] * fz
    lateral = v[0] * fz - v[1] * fx
    return (lateral, forward)
