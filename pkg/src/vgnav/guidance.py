"""Guidance schemes: path overlay, waypoint spheres, or the polar vector.

The "closest forthcoming" waypoint is resolved by arc length along the
planned path (not raw Euclidean distance), so a bypassed waypoint behind
the agent is never re-targeted while something lies ahead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from vgnav.errors import AllCollected
from vgnav.geom import bearing, dist, project_to_polyline, wrap180
from vgnav.planner import PlannedPath, WaypointSet
from vgnav.world import AgentState

COLLECTION_RADIUS = 2.0   # m, how close "reaching" a waypoint is
SPHERE_RADIUS = 0.5       # m, rendered waypoint ball size
PATH_RIBBON_WIDTH = 1.0   # m, rendered path width


class GuidanceScheme(str, Enum):
    PATH = "path"
    WAYPOINTS = "waypoints"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class HybridVector:
    """Polar pointer to the next waypoint: range in meters and relative
    bearing normalized by 180 (negative = target to the agent's left)."""

    r: float
    theta_norm: float


@dataclass(frozen=True)
class GuidanceGeometry:
    scheme: GuidanceScheme
    path_polyline: tuple[tuple[float, float], ...] | None = None
    visible_waypoints: tuple[tuple[tuple[float, float], float], ...] = ()

    @staticmethod
    def empty(scheme: GuidanceScheme = GuidanceScheme.HYBRID) -> "GuidanceGeometry":
        return GuidanceGeometry(scheme=scheme)


def next_waypoint_index(agent: AgentState, w: WaypointSet) -> int:
    """Index of the first uncollected waypoint at or past the agent's
    arc-length projection; falls back to the furthest uncollected one when
    everything left is behind."""
    open_idx = w.uncollected()
    if not open_idx:
        raise AllCollected("every waypoint has been collected")
    if w.path is not None and len(w.path.points) >= 2:
        s_agent, _ = project_to_polyline(list(w.path.points), agent.position)
    else:
        s_agent = 0.0
    ahead = [i for i in open_idx if w.arc_positions[i] >= s_agent]
    if ahead:
        return min(ahead, key=lambda i: (w.arc_positions[i], i))
    return max(open_idx, key=lambda i: (w.arc_positions[i], i))


def next_waypoint(agent: AgentState, w: WaypointSet) -> tuple[float, float]:
    return w.waypoints[next_waypoint_index(agent, w)]


def hybrid_vector(agent: AgentState, w: WaypointSet) -> HybridVector:
    """(r, theta) to the next waypoint; theta := 0 when the range is zero."""
    target = next_waypoint(agent, w)
    r = dist(agent.position, target)
    if r == 0.0:
        return HybridVector(r=0.0, theta_norm=0.0)
    theta = wrap180(bearing(agent.position, target) - agent.heading)
    return HybridVector(r=r, theta_norm=theta / 180.0)


def update_collection(
    agent: AgentState, w: WaypointSet, radius: float = COLLECTION_RADIUS
) -> tuple[WaypointSet, int]:
    """Mark every uncollected waypoint within `radius` of the agent as
    collected. Returns the updated set and how many were newly collected."""
    if radius <= 0:
        raise ValueError("collection radius must be > 0")
    collected = list(w.collected)
    newly = 0
    for i in w.uncollected():
        if dist(agent.position, w.waypoints[i]) <= radius:
            collected[i] = True
            newly += 1
    if newly == 0:
        return w, 0
    return replace(w, collected=collected), newly


def _trim_remaining(points, agent: AgentState, window: float):
    """Sub-polyline from the agent's projection forward, capped at `window`
    meters of arc."""
    pts = list(points)
    if len(pts) < 2:
        return tuple(pts)
    s0, _ = project_to_polyline(pts, agent.position)
    s1 = s0 + window
    out = []
    acc = 0.0
    for i in range(len(pts) - 1):
        seg = dist(pts[i], pts[i + 1])
        a, b = acc, acc + seg
        if b > s0 and a < s1 and seg > 0.0:
            fa = max(0.0, (s0 - a) / seg)
            fb = min(1.0, (s1 - a) / seg)
            pa = (pts[i][0] + fa * (pts[i + 1][0] - pts[i][0]),
                  pts[i][1] + fa * (pts[i + 1][1] - pts[i][1]))
            pb = (pts[i][0] + fb * (pts[i + 1][0] - pts[i][0]),
                  pts[i][1] + fb * (pts[i + 1][1] - pts[i][1]))
            if not out:
                out.append(pa)
            out.append(pb)
        acc += seg
    return tuple(out) if len(out) >= 2 else (pts[-1],)


def geometry_for(
    scheme: GuidanceScheme,
    path: PlannedPath | None,
    w: WaypointSet | None,
    agent: AgentState | None = None,
    window: float = math.inf,
) -> GuidanceGeometry:
    """Visual geometry for the active scheme.

    Path: the remaining plan polyline (full plan when no agent is given).
    Waypoints: every uncollected waypoint as a sphere. Hybrid: nothing —
    the vector is delivered out-of-band.
    """
    if scheme == GuidanceScheme.HYBRID:
        return GuidanceGeometry(scheme=scheme)
    if scheme == GuidanceScheme.PATH:
        if path is None:
            raise ValueError("path scheme needs a planned path")
        pts = tuple(path.points)
        if agent is not None:
            pts = _trim_remaining(pts, agent, window)
        return GuidanceGeometry(scheme=scheme, path_polyline=pts)
    if w is None:
        raise ValueError("waypoints scheme needs a waypoint set")
    spheres = tuple((w.waypoints[i], SPHERE_RADIUS) for i in w.uncollected())
    return GuidanceGeometry(scheme=scheme, visible_waypoints=spheres)
