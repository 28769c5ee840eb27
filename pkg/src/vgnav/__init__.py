"""Urban navigation simulator with virtual guidance rendering.

The package simulates a ground agent navigating a gridded city map. A
planner produces road-following trajectories, a guidance layer turns them
into visual overlays (colored path ribbon, waypoint spheres) or a polar
vector, and a software rasterizer renders semantic-segmentation frames
from the agent's viewpoint. Episode and metrics machinery evaluate
scripted or remote policies, and an environment server exposes the whole
loop over a newline-delimited JSON protocol.
"""

from vgnav.errors import (
    AllCollected,
    MapError,
    NoGroundIntersection,
    NoPath,
    OffRoad,
    ProtocolError,
    UnknownLabel,
    UnresolvedLabel,
    VgError,
)

__version__ = "0.1.0"

__all__ = [
    "VgError",
    "MapError",
    "NoPath",
    "OffRoad",
    "AllCollected",
    "NoGroundIntersection",
    "UnknownLabel",
    "UnresolvedLabel",
    "ProtocolError",
    "__version__",
]
