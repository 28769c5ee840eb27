"""Object detections plus a mission expression become guidance targets.

Detections come from "vgdet/1" JSON files (label, pixel box, score; see
docs/detections.md) instead of a live detector. Each box's bottom-center
pixel is inverse-projected onto the ground plane from a known camera and
agent pose. Mission expressions compose labels with & (reach all, in
order) or | (reach any one, nearest first).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from vgnav.errors import MapError, NoGroundIntersection, UnknownLabel, UnresolvedLabel
from vgnav.geom import cumulative_lengths, dist
from vgnav.guidance import GuidanceGeometry, GuidanceScheme, SPHERE_RADIUS
from vgnav.planner import PlannedPath, WaypointSet
from vgnav.render import CameraModel, inverse_project_ground
from vgnav.world import AgentState

DET_FORMAT = "vgdet/1"


@dataclass(frozen=True)
class Detection:
    label: str
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max (px)
    score: float

    def __post_init__(self):
        x0, y0, x1, y1 = self.bbox
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"degenerate bbox {self.bbox}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")

    @property
    def bottom_center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return ((x0 + x1) / 2.0, y1)


@dataclass(frozen=True)
class Mission:
    """Ordered label composition: op "all" (&) or "any" (|)."""

    op: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.op not in ("all", "any"):
            raise ValueError(f"unknown mission operator {self.op!r}")
        if not self.labels:
            raise ValueError("mission needs at least one label")


def parse_mission(text: str) -> Mission:
    """Parse "a & b" or "a | b | c"; single labels count as ALL of one."""
    if "&" in text and "|" in text:
        raise ValueError("mission may use & or |, not both")
    op = "any" if "|" in text else "all"
    sep = "|" if op == "any" else "&"
    labels = []
    for part in text.split(sep):
        label = part.strip().strip("'\"").strip()
        if label:
            labels.append(label)
    return Mission(op=op, labels=tuple(labels))


def load_detections(path) -> tuple[list[Detection], dict]:
    """Read a vgdet/1 file; returns (detections, extras) where extras may
    carry camera and agent-pose fields."""
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return parse_detections_doc(doc)


def parse_detections_doc(doc: dict) -> tuple[list[Detection], dict]:
    if doc.get("version") != DET_FORMAT:
        raise MapError(f"version: expected {DET_FORMAT!r}, got {doc.get('version')!r}")
    image = doc.get("image") or {}
    iw, ih = image.get("width"), image.get("height")
    dets = []
    for i, d in enumerate(doc.get("detections", [])):
        try:
            det = Detection(
                label=str(d["label"]),
                bbox=tuple(float(v) for v in d["bbox"]),
                score=float(d.get("score", 1.0)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise MapError(f"detections[{i}]: {e}") from None
        if iw is not None and ih is not None:
            x0, y0, x1, y1 = det.bbox
            if not (0 <= x0 and x1 <= iw and 0 <= y0 and y1 <= ih):
                raise MapError(f"detections[{i}]: bbox {det.bbox} outside {iw}x{ih} image")
        dets.append(det)
    extras = {k: doc[k] for k in ("camera", "agent") if k in doc}
    return dets, extras


def ground_targets(
    dets: list[Detection], cam: CameraModel, agent: AgentState
) -> dict[str, tuple[tuple[float, float], float]]:
    """Best ground point per label (highest score wins duplicates)."""
    best: dict[str, tuple[tuple[float, float], float]] = {}
    for det in dets:
        u, v = det.bottom_center
        point = inverse_project_ground(cam, agent, row=v, col=u)
        if point is None:
            raise NoGroundIntersection(
                f"{det.label!r} bottom edge at row {v} never meets the ground"
            )
        if det.label not in best or det.score > best[det.label][1]:
            best[det.label] = (point, det.score)
    return best


def compose_mission(
    mission: Mission,
    by_label: dict[str, tuple[tuple[float, float], float]],
    agent_position: tuple[float, float],
) -> list[tuple[str, tuple[float, float]]]:
    """Ordered (label, point) targets: ALL keeps prompt order and requires
    every label; ANY picks the single nearest resolved label."""
    if mission.op == "all":
        targets = []
        for label in mission.labels:
            if label not in by_label:
                raise UnresolvedLabel(f"mission label {label!r} has no detection")
            targets.append((label, by_label[label][0]))
        return targets
    resolved = [(label, by_label[label][0]) for label in mission.labels if label in by_label]
    if not resolved:
        raise UnknownLabel(f"none of {list(mission.labels)} were detected")
    return [min(resolved, key=lambda lp: (dist(agent_position, lp[1]), lp[0]))]


def detections_to_waypoints(
    dets: list[Detection],
    cam: CameraModel,
    agent: AgentState,
    mission: Mission | None = None,
) -> WaypointSet:
    """Mission-ordered ground waypoints from detection boxes.

    Without a mission, every distinct label becomes a waypoint in detection
    order. Raises UnknownLabel for a mission label with no detection.
    """
    by_label = ground_targets(dets, cam, agent)
    if mission is not None:
        for label in mission.labels:
            if label not in by_label and mission.op == "all":
                raise UnknownLabel(f"mission label {label!r} has no detection")
        targets = compose_mission(mission, by_label, agent.position)
    else:
        seen = []
        for det in dets:
            if det.label not in seen:
                seen.append(det.label)
        targets = [(label, by_label[label][0]) for label in seen]
    points = [p for _, p in targets]
    chain = [agent.position] + points
    arcs = cumulative_lengths(chain)[1:]
    path = PlannedPath(points=tuple(chain), length=arcs[-1] if arcs else 0.0)
    return WaypointSet(
        waypoints=points,
        spacing=float("inf"),
        collected=[False] * len(points),
        arc_positions=arcs,
        path=path,
    )


def guidance_from_mission(
    targets: list[tuple[float, float]],
    scheme: GuidanceScheme,
    agent_position: tuple[float, float],
) -> GuidanceGeometry:
    """Geometry for the remaining mission targets.

    Path mode draws a straight ribbon from the agent to the current (first
    remaining) target; callers re-invoke with the tail once it is reached.
    """
    if not targets:
        return GuidanceGeometry.empty(scheme)
    if scheme == GuidanceScheme.PATH:
        return GuidanceGeometry(
            scheme=scheme, path_polyline=(agent_position, targets[0])
        )
    if scheme == GuidanceScheme.WAYPOINTS:
        return GuidanceGeometry(
            scheme=scheme,
            visible_waypoints=tuple((t, SPHERE_RADIUS) for t in targets),
        )
    return GuidanceGeometry.empty(scheme)
