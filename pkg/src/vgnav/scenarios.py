"""Scenario sets (named route lists) and map resolution.

Maps and scenario files resolve by name against VG_MAP_DIR, then the
bundled package maps, then the literal path. The bundled city8 ships
"seen" (20 routes), "unseen" (4 routes), and "routes89" (the full
training-scale set).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from vgnav.errors import VgError
from vgnav.world import CityMap, load_map

SCENARIO_FORMAT = "vgscen/1"


@dataclass
class ScenarioSet:
    name: str
    routes: list[tuple[str, str]]
    episodes_per_route: int = 1
    pedestrians: bool = False

    def __post_init__(self):
        if not self.routes:
            raise VgError(f"scenario set {self.name!r} has no routes")
        if self.episodes_per_route < 1:
            raise VgError("episodes_per_route must be >= 1")

    def validate_against(self, cmap: CityMap) -> None:
        for s, d in self.routes:
            for label in (s, d):
                if label not in cmap.named_points:
                    raise VgError(
                        f"scenario {self.name!r}: route endpoint {label!r} not in map"
                    )


def _bundled_dir() -> Path:
    return Path(resources.files("vgnav") / "maps")


def resolve_map_path(name_or_path: str) -> Path:
    """Find a map file by name (without .json) or explicit path."""
    candidates = []
    env_dir = os.environ.get("VG_MAP_DIR")
    for base in ([Path(env_dir)] if env_dir else []) + [_bundled_dir()]:
        candidates.append(base / f"{name_or_path}.json")
        candidates.append(base / name_or_path)
    candidates.append(Path(name_or_path))
    for cand in candidates:
        if cand.is_file():
            return cand
    raise VgError(f"map {name_or_path!r} not found (searched VG_MAP_DIR, bundled maps, cwd)")


def open_map(name_or_path: str) -> CityMap:
    return load_map(resolve_map_path(name_or_path))


def _scenario_path_for_map(map_path: Path) -> Path:
    return map_path.with_name(map_path.stem + "_scenarios.json")


def load_scenario_set(spec: str, map_path: Path, cmap: CityMap) -> ScenarioSet:
    """Load a set by name from the map's scenario file, or from an explicit
    scenario JSON path (whole file = one custom set, or name via path#set)."""
    name = spec
    path = _scenario_path_for_map(map_path)
    if spec.endswith(".json") or os.path.sep in spec:
        file_spec, _, set_name = spec.partition("#")
        path = Path(file_spec)
        name = set_name or None
    if not path.is_file():
        raise VgError(f"scenario file {path} not found")
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("version") != SCENARIO_FORMAT:
        raise VgError(f"scenario version: expected {SCENARIO_FORMAT!r}")
    sets = doc.get("sets", {})
    if name is None:
        if len(sets) != 1:
            raise VgError(f"scenario file {path} has {len(sets)} sets; pick one with #name")
        name = next(iter(sets))
    if name not in sets:
        raise VgError(f"scenario set {name!r} not in {sorted(sets)}")
    raw = sets[name]
    out = ScenarioSet(
        name=name,
        routes=[(str(a), str(b)) for a, b in raw["routes"]],
        episodes_per_route=int(raw.get("episodes_per_route", 1)),
        pedestrians=bool(raw.get("pedestrians", False)),
    )
    out.validate_against(cmap)
    return out
