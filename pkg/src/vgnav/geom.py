"""Planar geometry helpers shared by the planner, guidance, and policies.

World frame: x grows with grid columns, y grows with grid rows (so +y is
"down" on a rendered map). Headings are degrees with 0 along +x; positive
heading changes rotate toward +y, which is the agent's right-hand side.
"""

from __future__ import annotations

import math


def wrap180(deg: float) -> float:
    """Wrap an angle in degrees to [-180, 180)."""
    return ((deg + 180.0) % 360.0) - 180.0


def heading_unit(heading_deg: float) -> tuple[float, float]:
    """Unit direction vector for a heading in degrees."""
    r = math.radians(heading_deg)
    return (math.cos(r), math.sin(r))


def bearing(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Heading (degrees, [-180, 180)) of the ray from a to b. Zero if a == b."""
    dx, dy = b[0] - a[0], b[1] - a[1]
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return wrap180(math.degrees(math.atan2(dy, dx)))


def dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


def polyline_length(points) -> float:
    """Total arc length; fsum keeps the result independent of segment order."""
    return math.fsum(dist(points[i], points[i + 1]) for i in range(len(points) - 1))


def cumulative_lengths(points) -> list[float]:
    """Arc length from the first vertex to each vertex."""
    out = [0.0]
    for i in range(len(points) - 1):
        out.append(out[-1] + dist(points[i], points[i + 1]))
    return out


def point_at_arc(points, s: float) -> tuple[float, float]:
    """Point at arc length s along the polyline, clamped to [0, length]."""
    if len(points) == 1:
        return points[0]
    if s <= 0.0:
        return points[0]
    acc = 0.0
    for i in range(len(points) - 1):
        seg = dist(points[i], points[i + 1])
        if acc + seg >= s and seg > 0.0:
            f = (s - acc) / seg
            ax, ay = points[i]
            bx, by = points[i + 1]
            return (ax + f * (bx - ax), ay + f * (by - ay))
        acc += seg
    return points[-1]


def _project_on_segment(p, a, b):
    """(distance, t in [0,1]) of the closest point to p on segment ab."""
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    d2 = dx * dx + dy * dy
    if d2 == 0.0:
        return math.hypot(px - ax, py - ay), 0.0
    t = ((px - ax) * dx + (py - ay) * dy) / d2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    cx, cy = ax + t * dx, ay + t * dy
    return math.hypot(px - cx, py - cy), t


def project_to_polyline(points, p) -> tuple[float, float]:
    """Project p onto the polyline.

    Returns (arc length of the nearest point, distance to it). Ties are
    resolved toward the earliest segment, keeping the result deterministic.
    """
    if len(points) == 1:
        return 0.0, dist(points[0], p)
    best_d = math.inf
    best_s = 0.0
    acc = 0.0
    for i in range(len(points) - 1):
        seg = dist(points[i], points[i + 1])
        d, t = _project_on_segment(p, points[i], points[i + 1])
        if d < best_d:
            best_d = d
            best_s = acc + t * seg
        acc += seg
    return best_s, best_d


def distance_to_polyline(points, p) -> float:
    return project_to_polyline(points, p)[1]
