"""Synthetic semantic-segmentation rendering from the agent's viewpoint.

Every pixel casts a ray from an agent-mounted pinhole camera. Ground
pixels take the class of the map cell they hit (with the guidance ribbon
painted on top), buildings are vertical prisms found by marching the ray
through the grid, and pedestrians and waypoint spheres are depth-tested
solids (an upright cylinder and a sphere). The nearest hit wins; rays that
hit nothing are Void. Everything is plain float64 numpy, so frames are
bitwise deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from vgnav.guidance import GuidanceGeometry
from vgnav.world import AgentState, CityMap, SemanticClass, PALETTE

FRAME_HEIGHT = 84
FRAME_WIDTH = 180

BUILDING_HEIGHT = 8.0   # m, prism height for occlusion
PED_WIDTH = 0.6         # m, rendered pedestrian width
PED_HEIGHT = 1.7        # m, rendered pedestrian height


@dataclass(frozen=True)
class CameraModel:
    """Agent-mounted forward camera; angles in degrees, distances in m.

    supersample > 1 renders on a denser pixel grid and reduces each block
    to its majority class (bilinear filtering is meaningless on class
    ids), trading time for cleaner thin-structure edges.
    """

    height: float = 1.5
    pitch: float = 10.0       # downward tilt
    hfov: float = 90.0
    width: int = FRAME_WIDTH
    rows: int = FRAME_HEIGHT
    near: float = 0.3
    far: float = 120.0        # building-occlusion march range
    supersample: int = 1

    def __post_init__(self):
        if not (0.0 < self.hfov < 180.0):
            raise ValueError("hfov must be in (0, 180)")
        if self.height <= 0 or self.near <= 0:
            raise ValueError("camera height and near plane must be > 0")
        if self.supersample < 1:
            raise ValueError("supersample must be >= 1")

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.hfov) / 2.0)

    @property
    def cx(self) -> float:
        return (self.width - 1) / 2.0

    @property
    def cy(self) -> float:
        return (self.rows - 1) / 2.0


@lru_cache(maxsize=8)
def _pixel_offsets(width: int, rows: int, fx: float, cx: float, cy: float):
    cols = (np.arange(width, dtype=np.float64) - cx) / fx
    rws = (np.arange(rows, dtype=np.float64) - cy) / fx
    u = np.broadcast_to(cols[None, :], (rows, width))
    w = np.broadcast_to(rws[:, None], (rows, width))
    return u, w


def camera_basis(cam: CameraModel, agent: AgentState):
    """(origin, forward, right, down) of the camera in world coordinates.

    The basis is orthonormal and forward-depth of a point equals its
    component along `forward`.
    """
    h = math.radians(agent.heading)
    p = math.radians(cam.pitch)
    gx, gy = math.cos(h), math.sin(h)
    fwd = np.array([math.cos(p) * gx, math.cos(p) * gy, -math.sin(p)])
    right = np.array([-gy, gx, 0.0])
    down = np.array([-math.sin(p) * gx, -math.sin(p) * gy, -math.cos(p)])
    origin = np.array([agent.position[0], agent.position[1], cam.height])
    return origin, fwd, right, down


def project(
    cam: CameraModel,
    agent: AgentState,
    p: tuple[float, float],
    elevation: float = 0.0,
):
    """Project a world point (at the given elevation) to (row, col, depth).

    Returns None for points behind the near plane or outside the frame.
    Row/col are fractional pixel coordinates.
    """
    origin, fwd, right, down = camera_basis(cam, agent)
    v = np.array([p[0], p[1], elevation]) - origin
    depth = float(v @ fwd)
    if depth < cam.near:
        return None
    col = cam.cx + cam.fx * float(v @ right) / depth
    row = cam.cy + cam.fx * float(v @ down) / depth
    if not (-0.5 <= col < cam.width - 0.5 and -0.5 <= row < cam.rows - 0.5):
        return None
    return (row, col, depth)


def inverse_project_ground(cam: CameraModel, agent: AgentState, row: float, col: float):
    """World point where the ray through a pixel meets the ground plane, or
    None when the ray never descends (at or above the horizon)."""
    origin, fwd, right, down = camera_basis(cam, agent)
    u = (col - cam.cx) / cam.fx
    w = (row - cam.cy) / cam.fx
    d = fwd + u * right + w * down
    if d[2] >= 0.0:
        return None
    t = -origin[2] / d[2]
    if t < cam.near:
        return None
    hit = origin + t * d
    return (float(hit[0]), float(hit[1]))


def _ribbon_mask(gx, gy, valid, polyline, half_width):
    """Ground pixels within half_width of the polyline."""
    mask = np.zeros(gx.shape, dtype=bool)
    if polyline is None or len(polyline) == 0:
        return mask
    hw2 = half_width * half_width
    best = np.full(gx.shape, np.inf)
    pts = list(polyline)
    if len(pts) == 1:
        pts = [pts[0], pts[0]]
    for (ax, ay), (bx, by) in zip(pts[:-1], pts[1:]):
        dx, dy = bx - ax, by - ay
        d2 = dx * dx + dy * dy
        px, py = gx - ax, gy - ay
        if d2 == 0.0:
            dist2 = px * px + py * py
        else:
            t = np.clip((px * dx + py * dy) / d2, 0.0, 1.0)
            ex, ey = px - t * dx, py - t * dy
            dist2 = ex * ex + ey * ey
        np.minimum(best, dist2, out=best)
    mask = valid & (best <= hw2)
    return mask


def _march_buildings(cmap, origin, dirs, t_limit, cam):
    """First ray parameter at which each ray enters a building prism, inf
    when none is hit before its limit. Fixed-step sampling at half a cell."""
    step = cmap.cell_size / 2.0
    n_steps = int(cam.far / step)
    hit_t = np.full(dirs.shape[:2], np.inf)
    inv = 1.0 / cmap.cell_size
    building = int(SemanticClass.BUILDING)
    for k in range(1, n_steps + 1):
        t = k * step
        live = (t < t_limit) & ~np.isfinite(hit_t)
        if not live.any():
            break
        z = origin[2] + t * dirs[:, :, 2]
        overhead = z > BUILDING_HEIGHT
        px = origin[0] + t * dirs[:, :, 0]
        py = origin[1] + t * dirs[:, :, 1]
        col = np.floor(px * inv).astype(np.int64)
        row = np.floor(py * inv).astype(np.int64)
        inside = (row >= 0) & (row < cmap.height) & (col >= 0) & (col < cmap.width)
        idx_r = np.clip(row, 0, cmap.height - 1)
        idx_c = np.clip(col, 0, cmap.width - 1)
        is_b = inside & (cmap.classes[idx_r, idx_c] == building)
        newly = live & is_b & ~overhead
        hit_t[newly] = t
    return hit_t


def _sphere_hits(origin, dirs, center, radius):
    """Nearest intersection parameter with a sphere, inf where missed."""
    oc = origin - np.asarray(center, dtype=np.float64)
    a = np.einsum("ijk,ijk->ij", dirs, dirs)
    b = 2.0 * (dirs @ oc)
    c = float(oc @ oc) - radius * radius
    disc = b * b - 4.0 * a * c
    t = np.full(dirs.shape[:2], np.inf)
    ok = disc >= 0.0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t_near = (-b - sq) / (2.0 * a)
    t[ok & (t_near > 0.0)] = t_near[ok & (t_near > 0.0)]
    return t

def _cylinder_hits(origin, dirs, center_xy, radius, height):
    """Nearest intersection with an upright cylinder footed on the ground."""
    ox = origin[0] - center_xy[0]
    oy = origin[1] - center_xy[1]
    dx = dirs[:, :, 0]
    dy = dirs[:, :, 1]
    a = dx * dx + dy * dy
    b = 2.0 * (ox * dx + oy * dy)
    c = ox * ox + oy * oy - radius * radius
    disc = b * b - 4.0 * a * c
    ok = (disc >= 0.0) & (a > 0.0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_near = (-b - sq) / (2.0 * a)
    z = origin[2] + t_near * dirs[:, :, 2]
    good = ok & (t_near > 0.0) & (z >= 0.0) & (z <= height)
    t = np.full(dirs.shape[:2], np.inf)
    t[good] = t_near[good]
    return t


def _majority_pool(frame: np.ndarray, k: int) -> np.ndarray:
    """Reduce kxk blocks to their most frequent class (ties: lowest id)."""
    rows, cols = frame.shape[0] // k, frame.shape[1] // k
    blocks = frame.reshape(rows, k, cols, k).swapaxes(1, 2).reshape(rows, cols, k * k)
    counts = np.stack(
        [(blocks == c).sum(axis=2) for c in range(len(SemanticClass))], axis=2
    )
    return counts.argmax(axis=2).astype(np.uint8)


def render_frame(
    cmap: CityMap,
    pedestrians,
    agent: AgentState,
    geometry: GuidanceGeometry | None = None,
    cam: CameraModel = CameraModel(),
) -> np.ndarray:
    """One (rows, width) uint8 frame of semantic class ids.

    `pedestrians` is a sequence of current (x, y) positions.
    """
    if cam.supersample > 1:
        k = cam.supersample
        dense = CameraModel(
            height=cam.height, pitch=cam.pitch, hfov=cam.hfov,
            width=cam.width * k, rows=cam.rows * k, near=cam.near, far=cam.far,
        )
        return _majority_pool(render_frame(cmap, pedestrians, agent, geometry, dense), k)

    origin, fwd, right, down = camera_basis(cam, agent)
    u, w = _pixel_offsets(cam.width, cam.rows, cam.fx, cam.cx, cam.cy)
    dirs = (
        fwd[None, None, :]
        + u[:, :, None] * right[None, None, :]
        + w[:, :, None] * down[None, None, :]
    )

    dz = dirs[:, :, 2]
    descending = dz < 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(descending, -origin[2] / dz, np.inf)
    t_ground = np.where(t_ground >= cam.near, t_ground, np.inf)

    ground_ok = np.isfinite(t_ground)
    t_safe = np.where(ground_ok, t_ground, 0.0)
    gx = np.where(ground_ok, origin[0] + t_safe * dirs[:, :, 0], 0.0)
    gy = np.where(ground_ok, origin[1] + t_safe * dirs[:, :, 1], 0.0)

    inv = 1.0 / cmap.cell_size
    col_idx = np.floor(gx * inv).astype(np.int64)
    row_idx = np.floor(gy * inv).astype(np.int64)
    inside = (
        ground_ok
        & (row_idx >= 0) & (row_idx < cmap.height)
        & (col_idx >= 0) & (col_idx < cmap.width)
    )
    ground_class = np.full(t_ground.shape, int(SemanticClass.VOID), dtype=np.uint8)
    rr = np.clip(row_idx, 0, cmap.height - 1)
    cc = np.clip(col_idx, 0, cmap.width - 1)
    ground_class[inside] = cmap.classes[rr, cc][inside]

    if geometry is not None and geometry.path_polyline:
        ribbon = _ribbon_mask(gx, gy, ground_ok, geometry.path_polyline, 0.5 * 1.0)
        ground_class[ribbon] = int(SemanticClass.GUIDANCE_PATH)

    best_t = np.where(ground_ok, t_ground, np.inf)
    frame = np.where(ground_ok, ground_class, int(SemanticClass.VOID)).astype(np.uint8)

    t_b = _march_buildings(cmap, origin, dirs, best_t, cam)
    closer = t_b < best_t
    frame[closer] = int(SemanticClass.BUILDING)
    best_t = np.where(closer, t_b, best_t)

    if geometry is not None:
        for center, radius in geometry.visible_waypoints:
            t_s = _sphere_hits(origin, dirs, (center[0], center[1], radius), radius)
            t_s = np.where(t_s >= cam.near, t_s, np.inf)
            closer = t_s < best_t
            frame[closer] = int(SemanticClass.WAYPOINT_MARKER)
            best_t = np.where(closer, t_s, best_t)

    for pos in pedestrians or ():
        t_p = _cylinder_hits(origin, dirs, (pos[0], pos[1]), PED_WIDTH / 2.0, PED_HEIGHT)
        t_p = np.where(t_p >= cam.near, t_p, np.inf)
        closer = t_p < best_t
        frame[closer] = int(SemanticClass.PEDESTRIAN)
        best_t = np.where(closer, t_p, best_t)

    return frame


@dataclass(frozen=True)
class ObservationStack:
    """The three most recent frames, oldest first."""

    frames: tuple[np.ndarray, np.ndarray, np.ndarray]

    @staticmethod
    def reset(frame: np.ndarray) -> "ObservationStack":
        return ObservationStack(frames=(frame, frame, frame))

    def to_bytes(self) -> bytes:
        return b"".join(f.tobytes() for f in self.frames)

    def to_array(self) -> np.ndarray:
        return np.stack(self.frames, axis=0)


def push_frame(stack: ObservationStack, frame: np.ndarray) -> ObservationStack:
    return ObservationStack(frames=(stack.frames[1], stack.frames[2], frame))


def frame_to_rgb(frame: np.ndarray) -> np.ndarray:
    """(rows, width, 3) uint8 image via the class palette."""
    lut = np.zeros((len(SemanticClass), 3), dtype=np.uint8)
    for cls, rgb in PALETTE.items():
        lut[int(cls)] = rgb
    return lut[frame]


def frame_to_ppm(frame: np.ndarray) -> bytes:
    """Binary portable pixmap (P6) of the palettized frame."""
    rgb = frame_to_rgb(frame)
    header = f"P6\n{frame.shape[1]} {frame.shape[0]}\n255\n".encode("ascii")
    return header + rgb.tobytes()
