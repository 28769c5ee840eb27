"""Static city map, dynamic pedestrians, and the agent's kinematic state.

Maps are uniform grids of semantic classes plus a road graph and named
route endpoints, loaded from "vgmap/1" JSON documents (see
docs/map-format.md). Cells own the half-open square
[x, x+cell_size) x [y, y+cell_size), so class queries are unambiguous on
cell boundaries.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Optional

import numpy as np

from vgnav.errors import MapError
from vgnav.geom import cumulative_lengths, heading_unit, point_at_arc, wrap180

# Kinematic defaults. The turn increment alpha*kappa*dt works out to an
# exact 7.0 deg/s in IEEE doubles, so repeated turns stay integer-valued.
DT = 0.1          # s, fixed simulation step
SPEED = 6.0       # m/s, constant forward speed
KAPPA = 2.0       # steering sensitivity
ALPHA = 35.0      # deg/s^2, magnitude of the discrete turn action
OMEGA_MAX = 90.0  # deg/s, angular velocity clamp

MAP_FORMAT = "vgmap/1"


class SemanticClass(IntEnum):
    VOID = 0
    ROAD = 1
    SIDEWALK = 2
    BUILDING = 3
    PEDESTRIAN = 4
    GUIDANCE_PATH = 5
    WAYPOINT_MARKER = 6
    AGENT = 7


# Display palette, one distinct RGB per class (scene classes follow the
# common urban-segmentation coloring; overlay classes are saturated).
PALETTE = {
    SemanticClass.VOID: (0, 0, 0),
    SemanticClass.ROAD: (128, 64, 128),
    SemanticClass.SIDEWALK: (244, 35, 232),
    SemanticClass.BUILDING: (70, 70, 70),
    SemanticClass.PEDESTRIAN: (220, 20, 60),
    SemanticClass.GUIDANCE_PATH: (0, 255, 0),
    SemanticClass.WAYPOINT_MARKER: (255, 255, 0),
    SemanticClass.AGENT: (0, 0, 255),
}

_CLASS_BY_NAME = {c.name.lower(): c for c in SemanticClass}
# Single-letter aliases accepted by the "rows" map encoding.
_CLASS_BY_CHAR = {
    "v": SemanticClass.VOID,
    "r": SemanticClass.ROAD,
    "s": SemanticClass.SIDEWALK,
    "b": SemanticClass.BUILDING,
}


def class_from_name(name: str) -> SemanticClass:
    key = name.strip().lower()
    if key in _CLASS_BY_NAME:
        return _CLASS_BY_NAME[key]
    if key in _CLASS_BY_CHAR:
        return _CLASS_BY_CHAR[key]
    raise MapError(f"unknown semantic class {name!r}")


@dataclass(frozen=True)
class Pedestrian:
    """Walker moving along a polyline at constant speed.

    Closed polylines wrap around; open ones ping-pong between their ends.
    `phase` is the arc-length offset at t=0.
    """

    path: tuple[tuple[float, float], ...]
    speed: float = 1.2
    radius: float = 0.3
    phase: float = 0.0
    closed: bool = False

    def __post_init__(self):
        if len(self.path) < 2:
            raise MapError("pedestrian path needs at least 2 points")
        if self.speed < 0:
            raise MapError("pedestrian speed must be >= 0")

    @property
    def loop_points(self) -> tuple[tuple[float, float], ...]:
        if self.closed and self.path[0] != self.path[-1]:
            return self.path + (self.path[0],)
        return self.path


def pedestrian_pose(ped: Pedestrian, t: float) -> tuple[float, float]:
    """World position of the pedestrian at simulation time t (seconds)."""
    pts = ped.loop_points
    lengths = cumulative_lengths(pts)
    total = lengths[-1]
    if total == 0.0:
        return pts[0]
    s = ped.phase + ped.speed * t
    if ped.closed:
        s = s % total
    else:
        s = s % (2.0 * total)
        if s > total:
            s = 2.0 * total - s
    return point_at_arc(pts, s)


@dataclass(frozen=True)
class AgentState:
    """Pose snapshot; step_dynamics returns a new state, never mutates."""

    position: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0  # deg in [-180, 180), 0 along +x, positive = right
    omega: float = 0.0    # deg/s
    speed: float = SPEED  # m/s
    t: int = 0            # timestep index


@dataclass(frozen=True)
class Action:
    """NOOP keeps the heading frozen; TURN(alpha) steers via Eq-style omega
    accumulation. The standard discrete set is NOOP, TURN(-35), TURN(+35)."""

    kind: str  # "noop" | "turn"
    alpha: float = 0.0

    @staticmethod
    def noop() -> "Action":
        return Action("noop", 0.0)

    @staticmethod
    def turn(alpha: float) -> "Action":
        return Action("turn", float(alpha))


NOOP = Action.noop()
TURN_LEFT = Action.turn(-ALPHA)
TURN_RIGHT = Action.turn(+ALPHA)
ACTION_SET = (NOOP, TURN_LEFT, TURN_RIGHT)
ACTION_NAMES = ("noop", "left", "right")


def action_by_name(name: str) -> Action:
    try:
        return ACTION_SET[ACTION_NAMES.index(name)]
    except ValueError:
        raise KeyError(f"unknown action {name!r}") from None


def step_dynamics(
    s: AgentState,
    a: Action,
    dt: float = DT,
    kappa: float = KAPPA,
    omega_max: float = OMEGA_MAX,
) -> AgentState:
    """Advance the agent by one fixed step.

    TURN accumulates angular velocity (omega += alpha * kappa * dt, clamped)
    and rotates the heading by omega*dt. NOOP advances straight: it keeps
    both heading and omega exactly as they are, so a later TURN resumes from
    the retained omega.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if a.kind == "noop":
        omega = s.omega
        heading = s.heading
    else:
        # alpha * (kappa * dt): this grouping makes the default increment an
        # exact 7.0 in floating point.
        omega = s.omega + a.alpha * (kappa * dt)
        omega = max(-omega_max, min(omega_max, omega))
        heading = wrap180(s.heading + omega * dt)
    ux, uy = heading_unit(heading)
    x, y = s.position
    return replace(
        s,
        position=(x + s.speed * dt * ux, y + s.speed * dt * uy),
        heading=heading,
        omega=omega,
        t=s.t + 1,
    )


@dataclass
class RoadGraph:
    nodes: list[dict] = field(default_factory=list)  # {id, x, y, kind}
    edges: list[tuple[str, str]] = field(default_factory=list)

    @property
    def intersections(self) -> list[dict]:
        return [n for n in self.nodes if n.get("kind", "intersection") == "intersection"]


@dataclass
class CityMap:
    """Validated grid world. `classes` is a (height, width) uint8 array."""

    cell_size: float
    width: int
    height: int
    classes: np.ndarray
    road_graph: RoadGraph = field(default_factory=RoadGraph)
    named_points: dict[str, tuple[float, float]] = field(default_factory=dict)
    pedestrians: list[Pedestrian] = field(default_factory=list)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return (0.0, 0.0, self.width * self.cell_size, self.height * self.cell_size)

    def cell_of(self, p: tuple[float, float]) -> Optional[tuple[int, int]]:
        """(row, col) of the cell owning p, or None outside the grid."""
        col = math.floor(p[0] / self.cell_size)
        row = math.floor(p[1] / self.cell_size)
        if 0 <= row < self.height and 0 <= col < self.width:
            return (row, col)
        return None

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return ((col + 0.5) * self.cell_size, (row + 0.5) * self.cell_size)

    def class_at_cell(self, row: int, col: int) -> SemanticClass:
        return SemanticClass(int(self.classes[row, col]))


def query_class(cmap: CityMap, p: tuple[float, float]) -> SemanticClass:
    """Semantic class of the cell containing p; VOID outside the bounds."""
    cell = cmap.cell_of(p)
    if cell is None:
        return SemanticClass.VOID
    return cmap.class_at_cell(*cell)


def _decode_classes(doc: dict, width: int, height: int) -> np.ndarray:
    spec = doc.get("classes")
    if not isinstance(spec, dict) or "encoding" not in spec:
        raise MapError("classes: expected {encoding, data}")
    enc = spec["encoding"]
    if enc == "rle":
        flat = np.empty(width * height, dtype=np.uint8)
        pos = 0
        for name, count in spec["data"]:
            count = int(count)
            if count <= 0:
                raise MapError(f"classes: non-positive run length {count}")
            flat[pos : pos + count] = int(class_from_name(name))
            pos += count
        if pos != width * height:
            raise MapError(f"classes: rle covers {pos} cells, expected {width * height}")
        return flat.reshape(height, width)
    if enc == "rows":
        rows = spec["data"]
        if len(rows) != height:
            raise MapError(f"classes: {len(rows)} rows, expected {height}")
        grid = np.empty((height, width), dtype=np.uint8)
        for r, row in enumerate(rows):
            cells = list(row) if isinstance(row, str) else row
            if len(cells) != width:
                raise MapError(f"classes: row {r} has {len(cells)} cells, expected {width}")
            for c, name in enumerate(cells):
                grid[r, c] = int(class_from_name(name))
        return grid
    raise MapError(f"classes: unknown encoding {enc!r}")


def load_map_doc(doc: dict) -> CityMap:
    """Validate a parsed vgmap/1 document and build a CityMap."""
    if doc.get("version") != MAP_FORMAT:
        raise MapError(f"version: expected {MAP_FORMAT!r}, got {doc.get('version')!r}")
    try:
        cell_size = float(doc["cell_size"])
        width = int(doc["width"])
        height = int(doc["height"])
    except (KeyError, TypeError, ValueError) as e:
        raise MapError(f"bad header field: {e}") from None
    if cell_size <= 0:
        raise MapError("cell_size must be > 0")
    if width <= 0 or height <= 0:
        raise MapError("width and height must be > 0")

    classes = _decode_classes(doc, width, height)

    graph = RoadGraph()
    for node in doc.get("road_graph", {}).get("nodes", []):
        graph.nodes.append(
            {
                "id": str(node["id"]),
                "x": float(node["x"]),
                "y": float(node["y"]),
                "kind": node.get("kind", "intersection"),
            }
        )
    node_ids = {n["id"] for n in graph.nodes}
    for a, b in doc.get("road_graph", {}).get("edges", []):
        if a not in node_ids or b not in node_ids:
            raise MapError(f"road_graph: edge ({a}, {b}) references unknown node")
        graph.edges.append((str(a), str(b)))

    named = {}
    for label, xy in doc.get("named_points", {}).items():
        named[str(label)] = (float(xy[0]), float(xy[1]))

    peds = []
    for i, pd in enumerate(doc.get("pedestrians", [])):
        pts = tuple((float(x), float(y)) for x, y in pd["path"])
        closed = bool(pd.get("closed", len(pts) > 2 and pts[0] == pts[-1]))
        try:
            peds.append(
                Pedestrian(
                    path=pts,
                    speed=float(pd.get("speed", 1.2)),
                    radius=float(pd.get("radius", 0.3)),
                    phase=float(pd.get("phase", 0.0)),
                    closed=closed,
                )
            )
        except MapError as e:
            raise MapError(f"pedestrians[{i}]: {e}") from None

    cmap = CityMap(
        cell_size=cell_size,
        width=width,
        height=height,
        classes=classes,
        road_graph=graph,
        named_points=named,
        pedestrians=peds,
    )

    for label, p in cmap.named_points.items():
        if query_class(cmap, p) != SemanticClass.ROAD:
            raise MapError(f"named_points[{label!r}] at {p} is not on a Road cell")
    for node in graph.nodes:
        if query_class(cmap, (node["x"], node["y"])) != SemanticClass.ROAD:
            raise MapError(f"road_graph node {node['id']!r} is not on a Road cell")
    return cmap


def load_map(path) -> CityMap:
    """Load and validate a vgmap/1 JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise MapError(f"cannot read map file: {e}") from None
    except json.JSONDecodeError as e:
        raise MapError(f"map file is not valid JSON: {e}") from None
    return load_map_doc(doc)
