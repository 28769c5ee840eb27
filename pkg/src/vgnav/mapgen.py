"""Programmatic map construction.

build_city8() is the source of truth for the bundled city8 map (eight
intersections on a 400x400 m grid of streets); `python -m vgnav.mapgen`
regenerates the packaged JSON files from it. The random road maps are used
by tests to exercise the planner against an independent oracle.
"""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import numpy as np

from vgnav.world import CityMap, SemanticClass, load_map_doc

B = SemanticClass.BUILDING
R = SemanticClass.ROAD
S = SemanticClass.SIDEWALK
V = SemanticClass.VOID

# city8 layout constants (meters). Street centerlines sit on cell centers
# so that planned paths can run exactly along them; 3-cell roads leave half
# a cell (2 m) of margin between an edge-hugging path and the sidewalk.
CELL = 4.0
SIZE = 100  # cells per side
ROAD_HALF = 6.0      # road half-width
WALK_W = 4.0         # sidewalk band width
VSTREET_X = (50.0, 150.0, 250.0, 350.0)
HSTREET_Y = (102.0, 298.0)


def _rle_encode(grid: np.ndarray) -> list[list]:
    flat = grid.reshape(-1)
    runs = []
    start = 0
    for i in range(1, len(flat) + 1):
        if i == len(flat) or flat[i] != flat[start]:
            runs.append([SemanticClass(int(flat[start])).name.lower(), i - start])
            start = i
    return runs


def _paint_band(grid, lo: float, hi: float, axis: str, value: int):
    c0 = int(lo / CELL)
    c1 = int(hi / CELL)  # exclusive, half-open band [lo, hi)
    if axis == "x":
        grid[:, c0:c1] = value
    else:
        grid[c0:c1, :] = value


def city8_grid() -> np.ndarray:
    grid = np.full((SIZE, SIZE), int(B), dtype=np.uint8)
    for x in VSTREET_X:
        _paint_band(grid, x - ROAD_HALF - WALK_W, x + ROAD_HALF + WALK_W, "x", int(S))
    for y in HSTREET_Y:
        _paint_band(grid, y - ROAD_HALF - WALK_W, y + ROAD_HALF + WALK_W, "y", int(S))
    for x in VSTREET_X:
        _paint_band(grid, x - ROAD_HALF, x + ROAD_HALF, "x", int(R))
    for y in HSTREET_Y:
        _paint_band(grid, y - ROAD_HALF, y + ROAD_HALF, "y", int(R))
    return grid


def _city8_named_points() -> dict[str, tuple[float, float]]:
    pts = {}
    k = 1
    for y in HSTREET_Y:
        for x in VSTREET_X:
            pts[f"i{k}"] = (x, y)
            k += 1
    for j, x in enumerate(VSTREET_X, start=1):
        pts[f"n{j}"] = (x, 10.0)
        pts[f"s{j}"] = (x, 390.0)
    for j, y in enumerate(HSTREET_Y, start=1):
        pts[f"w{j}"] = (10.0, y)
        pts[f"e{j}"] = (390.0, y)
    return pts


def _city8_graph(named) -> dict:
    nodes = []
    for label, (x, y) in named.items():
        kind = "intersection" if label.startswith("i") else "terminus"
        nodes.append({"id": label, "x": x, "y": y, "kind": kind})
    edges = [
        ["w1", "i1"], ["i1", "i2"], ["i2", "i3"], ["i3", "i4"], ["i4", "e1"],
        ["w2", "i5"], ["i5", "i6"], ["i6", "i7"], ["i7", "i8"], ["i8", "e2"],
        ["n1", "i1"], ["i1", "i5"], ["i5", "s1"],
        ["n2", "i2"], ["i2", "i6"], ["i6", "s2"],
        ["n3", "i3"], ["i3", "i7"], ["i7", "s3"],
        ["n4", "i4"], ["i4", "i8"], ["i8", "s4"],
    ]
    return {"nodes": nodes, "edges": edges}


def _city8_pedestrians() -> list[dict]:
    # Mid-block street crossers (ping-pong, sidewalk to sidewalk) plus one
    # loop around an intersection; speeds in m/s.
    return [
        {"path": [[142.0, 200.0], [158.0, 200.0]], "speed": 1.2, "radius": 0.3, "phase": 0.0},
        {"path": [[242.0, 60.0], [258.0, 60.0]], "speed": 1.0, "radius": 0.3, "phase": 12.0},
        {"path": [[342.0, 240.0], [358.0, 240.0]], "speed": 1.4, "radius": 0.3, "phase": 25.0},
        {
            "path": [[142.0, 94.0], [158.0, 94.0], [158.0, 110.0], [142.0, 110.0]],
            "speed": 1.1,
            "radius": 0.3,
            "phase": 5.0,
            "closed": True,
        },
    ]


def build_city8() -> dict:
    """city8 vgmap/1 document: eight intersections, four crossers."""
    named = _city8_named_points()
    return {
        "version": "vgmap/1",
        "name": "city8",
        "cell_size": CELL,
        "width": SIZE,
        "height": SIZE,
        "classes": {"encoding": "rle", "data": _rle_encode(city8_grid())},
        "road_graph": _city8_graph(named),
        "named_points": {k: list(v) for k, v in named.items()},
        "pedestrians": _city8_pedestrians(),
    }


SEEN_ROUTES = [
    ["n1", "s1"], ["w1", "e1"], ["n2", "s3"], ["w2", "n4"], ["n1", "e1"],
    ["s2", "w1"], ["i1", "i8"], ["i4", "i5"], ["n3", "s2"], ["e2", "n2"],
    ["s4", "w2"], ["i2", "e2"], ["n4", "i6"], ["w1", "s3"], ["e1", "n1"],
    ["i3", "s1"], ["s1", "e2"], ["i7", "w1"], ["n2", "i8"], ["i5", "e1"],
]

UNSEEN_ROUTES = [["n1", "e2"], ["s3", "i2"], ["e2", "w1"], ["i6", "n1"]]


def _routes89() -> list[list[str]]:
    """Large training-scale route set: the seen routes plus deterministic
    extras, disjoint from the unseen evaluation pairs."""
    labels = sorted(_city8_named_points().keys())
    pairs = [[a, b] for a in labels for b in labels if a != b]
    rng = random.Random(89)
    rng.shuffle(pairs)
    taken = [list(r) for r in SEEN_ROUTES]
    seen = {tuple(r) for r in taken} | {tuple(r) for r in UNSEEN_ROUTES}
    for pair in pairs:
        if len(taken) == 89:
            break
        if tuple(pair) not in seen:
            taken.append(pair)
            seen.add(tuple(pair))
    return taken


def build_city8_scenarios() -> dict:
    return {
        "version": "vgscen/1",
        "map": "city8",
        "sets": {
            "seen": {"routes": SEEN_ROUTES, "episodes_per_route": 1},
            "unseen": {"routes": UNSEEN_ROUTES, "episodes_per_route": 1},
            "routes89": {"routes": _routes89(), "episodes_per_route": 1},
        },
    }


def uniform_map(width: int, height: int, cell_size: float = 1.0,
                fill: SemanticClass = R) -> CityMap:
    """Single-class map, handy for kinematics and rendering tests."""
    return load_map_doc(
        {
            "version": "vgmap/1",
            "cell_size": cell_size,
            "width": width,
            "height": height,
            "classes": {"encoding": "rle", "data": [[fill.name.lower(), width * height]]},
        }
    )


def random_road_map(seed: int, width: int = 64, height: int = 64,
                    density: float = 0.3, cell_size: float = 1.0) -> CityMap:
    """Road grid with uniformly scattered building cells."""
    rng = np.random.default_rng(seed)
    grid = np.where(rng.random((height, width)) < density, int(B), int(R)).astype(np.uint8)
    return load_map_doc(
        {
            "version": "vgmap/1",
            "cell_size": cell_size,
            "width": width,
            "height": height,
            "classes": {"encoding": "rle", "data": _rle_encode(grid)},
        }
    )


def write_bundled(outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, doc in (
        ("city8.json", build_city8()),
        ("city8_scenarios.json", build_city8_scenarios()),
    ):
        path = outdir / name
        path.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "maps"
    for p in write_bundled(target):
        print(p)
