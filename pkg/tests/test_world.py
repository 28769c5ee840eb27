import math

import pytest

from vgnav.errors import MapError
from vgnav.mapgen import uniform_map
from vgnav.world import (
    NOOP,
    TURN_LEFT,
    TURN_RIGHT,
    Action,
    AgentState,
    Pedestrian,
    SemanticClass,
    load_map_doc,
    pedestrian_pose,
    query_class,
    step_dynamics,
)


def minimal_doc(**overrides):
    doc = {
        "version": "vgmap/1",
        "cell_size": 1.0,
        "width": 1,
        "height": 1,
        "classes": {"encoding": "rle", "data": [["road", 1]]},
    }
    doc.update(overrides)
    return doc


class TestLoadMap:
    def test_bundled_city8_has_eight_intersections(self, city8):
        assert len(city8.road_graph.intersections) == 8

    def test_trivial_one_cell_map(self):
        cmap = load_map_doc(minimal_doc())
        assert cmap.width == cmap.height == 1
        assert query_class(cmap, (0.5, 0.5)) == SemanticClass.ROAD

    def test_named_point_off_road_rejected(self):
        doc = minimal_doc(
            width=2,
            classes={"encoding": "rle", "data": [["road", 1], ["building", 1]]},
            named_points={"goal": [1.5, 0.5]},
        )
        with pytest.raises(MapError, match="goal"):
            load_map_doc(doc)

    def test_bad_version_rejected(self):
        with pytest.raises(MapError, match="version"):
            load_map_doc(minimal_doc(version="vgmap/2"))

    def test_rle_length_mismatch_rejected(self):
        with pytest.raises(MapError, match="rle"):
            load_map_doc(minimal_doc(classes={"encoding": "rle", "data": [["road", 2]]}))

    def test_graph_edge_to_unknown_node_rejected(self):
        doc = minimal_doc(
            road_graph={
                "nodes": [{"id": "a", "x": 0.5, "y": 0.5}],
                "edges": [["a", "b"]],
            }
        )
        with pytest.raises(MapError, match="edge"):
            load_map_doc(doc)

    def test_rows_encoding(self):
        doc = minimal_doc(
            width=2,
            height=2,
            classes={"encoding": "rows", "data": ["rb", "sv"]},
        )
        cmap = load_map_doc(doc)
        assert query_class(cmap, (0.5, 0.5)) == SemanticClass.ROAD
        assert query_class(cmap, (1.5, 0.5)) == SemanticClass.BUILDING
        assert query_class(cmap, (0.5, 1.5)) == SemanticClass.SIDEWALK
        assert query_class(cmap, (1.5, 1.5)) == SemanticClass.VOID


class TestQueryClass:
    def test_outside_bounds_is_void(self):
        cmap = uniform_map(4, 4, 1.0)
        assert query_class(cmap, (-1.0, 2.0)) == SemanticClass.VOID
        assert query_class(cmap, (2.0, 5.0)) == SemanticClass.VOID

    def test_boundary_point_belongs_to_upper_cell(self):
        # cells own [x, x+cell_size): the point exactly on the shared edge
        # belongs to the cell on the right
        doc = minimal_doc(
            width=2,
            classes={"encoding": "rle", "data": [["road", 1], ["building", 1]]},
        )
        cmap = load_map_doc(doc)
        assert query_class(cmap, (1.0, 0.5)) == SemanticClass.BUILDING
        assert query_class(cmap, (math.nextafter(1.0, 0.0), 0.5)) == SemanticClass.ROAD


class TestPedestrians:
    def test_zero_speed_stays_at_phase(self):
        ped = Pedestrian(path=((0.0, 0.0), (10.0, 0.0)), speed=0.0, phase=3.0)
        for t in (0.0, 5.0, 100.0):
            assert pedestrian_pose(ped, t) == (3.0, 0.0)

    def test_closed_loop_wraps(self):
        square = ((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0))
        ped = Pedestrian(path=square, speed=1.0, closed=True)
        assert pedestrian_pose(ped, 40.0) == pytest.approx((0.0, 0.0), abs=1e-12)
        assert pedestrian_pose(ped, 15.0) == pytest.approx((10.0, 5.0), abs=1e-12)

    def test_open_path_ping_pongs(self):
        ped = Pedestrian(path=((0.0, 0.0), (10.0, 0.0)), speed=1.0)
        # 15 m of walking on a 10 m segment: 5 m back from the far end
        assert pedestrian_pose(ped, 15.0) == pytest.approx((5.0, 0.0), abs=1e-12)
        assert pedestrian_pose(ped, 20.0) == pytest.approx((0.0, 0.0), abs=1e-12)

    def test_too_short_path_rejected(self):
        with pytest.raises(MapError):
            Pedestrian(path=((0.0, 0.0),))

    def test_pose_always_on_polyline(self):
        import random

        from vgnav.geom import distance_to_polyline

        rng = random.Random(13)
        open_ped = Pedestrian(path=((0.0, 0.0), (8.0, 0.0), (8.0, 6.0)), speed=1.3, phase=2.0)
        loop = Pedestrian(
            path=((0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)),
            speed=0.9, phase=5.0, closed=True,
        )
        for ped in (open_ped, loop):
            pts = list(ped.loop_points)
            for _ in range(100):
                pose = pedestrian_pose(ped, rng.uniform(0.0, 500.0))
                assert distance_to_polyline(pts, pose) < 1e-9


class TestDynamics:
    def test_noop_advances_along_heading(self):
        s = AgentState(position=(0.0, 0.0), heading=0.0, omega=0.0)
        s1 = step_dynamics(s, NOOP, 0.1)
        assert s1.omega == 0.0
        assert s1.heading == 0.0
        assert s1.position == pytest.approx((0.6, 0.0), rel=1e-12)
        assert s1.t == 1

    def test_turn_increment_is_exact(self):
        s = AgentState()
        s1 = step_dynamics(s, TURN_RIGHT, 0.1)
        assert s1.omega == 7.0

    def test_omega_saturates(self):
        s = AgentState()
        for _ in range(100):
            s = step_dynamics(s, TURN_RIGHT, 0.1)
        assert s.omega == 90.0

    def test_noop_preserves_heading_and_omega_exactly(self):
        s = AgentState(heading=42.25, omega=21.0)
        s1 = step_dynamics(s, NOOP, 0.1)
        assert s1.heading == 42.25
        assert s1.omega == 21.0

    def test_displacement_magnitude(self):
        import random

        rng = random.Random(7)
        for _ in range(50):
            s = AgentState(heading=rng.uniform(-180, 180), omega=rng.uniform(-90, 90))
            a = rng.choice([NOOP, TURN_LEFT, TURN_RIGHT])
            s1 = step_dynamics(s, a, 0.1)
            d = math.hypot(s1.position[0] - s.position[0], s1.position[1] - s.position[1])
            assert d == pytest.approx(0.6, rel=1e-12)

    def test_heading_always_wrapped(self):
        import random

        rng = random.Random(3)
        s = AgentState()
        for _ in range(500):
            s = step_dynamics(s, rng.choice([NOOP, TURN_LEFT, TURN_RIGHT]), 0.1)
            assert -180.0 <= s.heading < 180.0

    def test_left_right_mirror_symmetry(self):
        # mirroring the world across the agent's heading axis (y -> -y for
        # heading 0) and negating alpha mirrors the trajectory
        actions = [TURN_RIGHT] * 12 + [NOOP] * 6 + [TURN_LEFT] * 20 + [NOOP] * 10
        mirrored = [
            Action(a.kind, -a.alpha) if a.kind == "turn" else a for a in actions
        ]
        s = AgentState()
        m = AgentState()
        for a, am in zip(actions, mirrored):
            s = step_dynamics(s, a, 0.1)
            m = step_dynamics(m, am, 0.1)
            assert m.position[0] == pytest.approx(s.position[0], abs=1e-9)
            assert m.position[1] == pytest.approx(-s.position[1], abs=1e-9)

    def test_determinism_bitwise(self):
        import random

        rng = random.Random(11)
        actions = [rng.choice([NOOP, TURN_LEFT, TURN_RIGHT]) for _ in range(300)]

        def rollout():
            s = AgentState()
            out = []
            for a in actions:
                s = step_dynamics(s, a, 0.1)
                out.append((s.position, s.heading, s.omega, s.t))
            return out

        assert rollout() == rollout()

    def test_bad_dt_rejected(self):
        with pytest.raises(ValueError):
            step_dynamics(AgentState(), NOOP, 0.0)
