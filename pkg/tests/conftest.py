import json
from pathlib import Path

import pytest

from vgnav.scenarios import resolve_map_path
from vgnav.world import load_map


@pytest.fixture(scope="session")
def city8_path() -> Path:
    return resolve_map_path("city8")


@pytest.fixture(scope="session")
def city8(city8_path):
    return load_map(city8_path)


@pytest.fixture(scope="session")
def city8_scenarios(city8_path):
    with open(city8_path.with_name("city8_scenarios.json"), "r", encoding="utf-8") as f:
        return json.load(f)


@pytest.fixture(scope="session")
def seen_routes(city8_scenarios):
    return [tuple(r) for r in city8_scenarios["sets"]["seen"]["routes"]]


@pytest.fixture(scope="session")
def unseen_routes(city8_scenarios):
    return [tuple(r) for r in city8_scenarios["sets"]["unseen"]["routes"]]
