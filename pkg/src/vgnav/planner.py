"""Grid path planning over road cells.

A* runs on the 8-connected lattice of Road cell centers with unit/sqrt(2)
step costs and an octile heuristic. Among equal-cost optimal paths, the
search prefers cells away from road edges (a lexicographic secondary
objective), then breaks remaining ties by smaller heuristic and smaller
(row, col) index, so searches are fully deterministic and returned paths
run down street centers wherever that is free. Diagonal moves may not cut
corners past a non-road cell. Endpoints snap to the nearest Road cell
center within one cell.

Step costs accumulate as exact (straight, diagonal) counts; since
a + b*sqrt(2) decomposes uniquely over the integers, canonical float
costs compare reliably and two optimal planners agree bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush

import numpy as np

from vgnav.errors import NoPath, OffRoad
from vgnav.geom import point_at_arc, polyline_length
from vgnav.world import AgentState, CityMap, SemanticClass

SQRT2 = math.sqrt(2.0)
DEFAULT_WAYPOINT_SPACING = 10.0  # m


@dataclass(frozen=True)
class PlannedPath:
    """Road-following polyline with its canonical cost.

    `length` sums the simplified segments; `straight`/`diagonal` count the
    underlying lattice steps, from which `cost` is reconstructed exactly
    (the decomposition a + b*sqrt(2) is unique, so equal costs imply equal
    step counts).
    """

    points: tuple[tuple[float, float], ...]
    length: float
    straight: int = 0
    diagonal: int = 0

    @property
    def cost(self) -> float:
        return self.straight + self.diagonal * SQRT2

    def scaled_cost(self, cell_size: float) -> float:
        return (self.straight + self.diagonal * SQRT2) * cell_size


@dataclass
class WaypointSet:
    """Waypoints spaced along a path, with per-waypoint collected flags."""

    waypoints: list[tuple[float, float]]
    spacing: float
    collected: list[bool]
    arc_positions: list[float] = field(default_factory=list)
    path: PlannedPath | None = None

    @property
    def total(self) -> int:
        return len(self.waypoints)

    @property
    def collected_count(self) -> int:
        return sum(self.collected)

    def uncollected(self):
        return [i for i, c in enumerate(self.collected) if not c]


@dataclass(frozen=True)
class PlanMode:
    kind: str  # "onetime" | "realtime"
    period: int = 1

    def __post_init__(self):
        if self.kind not in ("onetime", "realtime"):
            raise ValueError(f"unknown plan mode {self.kind!r}")
        if self.period < 1:
            raise ValueError("replanning period must be >= 1")

    @staticmethod
    def parse(text: str) -> "PlanMode":
        """Parse "onetime" or "realtime[:period]"."""
        if ":" in text:
            kind, _, per = text.partition(":")
            return PlanMode(kind, int(per))
        return PlanMode(text)


ONE_TIME = PlanMode("onetime")
REAL_TIME = PlanMode("realtime", 1)


def _is_road(cmap: CityMap, row: int, col: int) -> bool:
    return (
        0 <= row < cmap.height
        and 0 <= col < cmap.width
        and cmap.classes[row, col] == SemanticClass.ROAD
    )


def snap_to_road(cmap: CityMap, p: tuple[float, float]) -> tuple[int, int]:
    """(row, col) of the nearest Road cell within one cell of p."""
    col = math.floor(p[0] / cmap.cell_size)
    row = math.floor(p[1] / cmap.cell_size)
    best = None
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r, c = row + dr, col + dc
            if not _is_road(cmap, r, c):
                continue
            cx, cy = cmap.cell_center(r, c)
            d = math.hypot(cx - p[0], cy - p[1])
            key = (d, r, c)
            if best is None or key < best:
                best = key
    if best is None:
        raise OffRoad(f"no Road cell within one cell of {p}")
    return best[1], best[2]


def _octile(dr: int, dc: int) -> float:
    dr, dc = abs(dr), abs(dc)
    lo, hi = (dr, dc) if dr < dc else (dc, dr)
    return (hi - lo) + lo * SQRT2


def _neighbors(cmap: CityMap, row: int, col: int):
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            r, c = row + dr, col + dc
            if not _is_road(cmap, r, c):
                continue
            if dr != 0 and dc != 0:
                # no cutting past a blocked orthogonal neighbor
                if not (_is_road(cmap, row, c) and _is_road(cmap, r, col)):
                    continue
            yield r, c, (dr == 0 or dc == 0)


def _simplify(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Drop interior vertices collinear with their neighbors."""
    if len(points) <= 2:
        return points
    keep = [points[0]]
    for i in range(1, len(points) - 1):
        ax, ay = keep[-1]
        bx, by = points[i]
        cx, cy = points[i + 1]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if cross != 0.0:
            keep.append(points[i])
    keep.append(points[-1])
    return keep


def _edge_penalty_grid(cmap: CityMap):
    """1 for road cells bordering anything that is not road, else 0."""
    road = cmap.classes == int(SemanticClass.ROAD)
    interior = np.zeros_like(road)
    interior[1:-1, 1:-1] = (
        road[1:-1, 1:-1]
        & road[:-2, 1:-1]
        & road[2:, 1:-1]
        & road[1:-1, :-2]
        & road[1:-1, 2:]
    )
    return (road & ~interior).astype(np.int32)


def plan(cmap: CityMap, start: tuple[float, float], goal: tuple[float, float]) -> PlannedPath:
    """Shortest road path between two world points.

    Raises OffRoad when an endpoint cannot snap to a Road cell, NoPath when
    the goal is unreachable.
    """
    s = snap_to_road(cmap, start)
    g = snap_to_road(cmap, goal)
    if s == g:
        return PlannedPath(points=(cmap.cell_center(*s),), length=0.0)

    width = cmap.width
    edge_pen = _edge_penalty_grid(cmap)
    # per-cell cost: (straight steps, diagonal steps, edge-cell count)
    counts: dict[tuple[int, int], tuple[int, int, int]] = {s: (0, 0, int(edge_pen[s]))}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    h0 = _octile(g[0] - s[0], g[1] - s[1])
    heap = [(h0, 0, h0, s[0] * width + s[1], s)]
    while heap:
        f, e, h, _, cell = heappop(heap)
        st, dg, pe = counts[cell]
        if (f, e) > (st + dg * SQRT2 + h, pe):
            continue  # stale entry
        if cell == g:
            break
        for r, c, straight in _neighbors(cmap, *cell):
            nb = (r, c)
            nst, ndg = (st + 1, dg) if straight else (st, dg + 1)
            ne = pe + int(edge_pen[nb])
            new_key = (nst + ndg * SQRT2, ne)
            old = counts.get(nb)
            if old is None or new_key < (old[0] + old[1] * SQRT2, old[2]):
                counts[nb] = (nst, ndg, ne)
                came[nb] = cell
                nh = _octile(g[0] - r, g[1] - c)
                heappush(heap, (new_key[0] + nh, ne, nh, r * width + c, nb))
    else:
        raise NoPath(f"no road path from {start} to {goal}")

    cells = [g]
    straight_steps = 0
    diag_steps = 0
    while cells[-1] != s:
        prev = came[cells[-1]]
        if prev[0] == cells[-1][0] or prev[1] == cells[-1][1]:
            straight_steps += 1
        else:
            diag_steps += 1
        cells.append(prev)
    cells.reverse()
    points = _simplify([cmap.cell_center(r, c) for r, c in cells])
    return PlannedPath(
        points=tuple(points),
        length=polyline_length(points),
        straight=straight_steps,
        diagonal=diag_steps,
    )


def dijkstra_cost(cmap: CityMap, start: tuple[float, float], goal: tuple[float, float]) -> float:
    """Independent shortest-path oracle (no heuristic, count-based cost)."""
    s = snap_to_road(cmap, start)
    g = snap_to_road(cmap, goal)
    if s == g:
        return 0.0
    counts = {s: (0, 0)}  # (straight, diagonal) step counts
    heap = [(0.0, s[0] * cmap.width + s[1], s)]
    done = set()
    while heap:
        d, _, cell = heappop(heap)
        if cell in done:
            continue
        done.add(cell)
        if cell == g:
            st, dg = counts[cell]
            return (st + dg * SQRT2) * cmap.cell_size
        st, dg = counts[cell]
        for r, c, straight in _neighbors(cmap, *cell):
            if (r, c) in done:
                continue
            nst, ndg = (st + 1, dg) if straight else (st, dg + 1)
            nd = nst + ndg * SQRT2
            old = counts.get((r, c))
            if old is None or nd < old[0] + old[1] * SQRT2:
                counts[(r, c)] = (nst, ndg)
                heappush(heap, (nd, r * cmap.width + c, (r, c)))
    raise NoPath(f"no road path from {start} to {goal}")


def extract_waypoints(path: PlannedPath, spacing: float = DEFAULT_WAYPOINT_SPACING) -> WaypointSet:
    """Waypoints every `spacing` meters of arc length, ending exactly at the
    destination. A zero-length path yields the destination alone."""
    if spacing <= 0:
        raise ValueError("waypoint spacing must be > 0")
    pts = list(path.points)
    total = path.length
    arcs = []
    k = 1
    # strictly interior multiples; the final waypoint is always D
    while k * spacing < total and not math.isclose(k * spacing, total, rel_tol=0.0, abs_tol=1e-9):
        arcs.append(k * spacing)
        k += 1
    arcs.append(total)
    waypoints = [point_at_arc(pts, s) for s in arcs]
    return WaypointSet(
        waypoints=waypoints,
        spacing=spacing,
        collected=[False] * len(waypoints),
        arc_positions=arcs,
        path=path,
    )


def plan_for_step(
    mode: PlanMode,
    cmap: CityMap,
    agent: AgentState,
    start: tuple[float, float],
    goal: tuple[float, float],
    cached: PlannedPath | None,
) -> PlannedPath:
    """Plan according to the mode: one-time plans S->D once and reuses it;
    real-time replans P_t->D every `period` steps."""
    if mode.kind == "onetime":
        if cached is None:
            return plan(cmap, start, goal)
        return cached
    if cached is None or agent.t % mode.period == 0:
        return plan(cmap, agent.position, goal)
    return cached
