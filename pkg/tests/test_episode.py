import math

import pytest

from vgnav.episode import (
    EpisodeConfig,
    EpisodeRunner,
    Event,
    Outcome,
    check_termination,
    goal_reward,
    nav_reward,
    run_episode,
)
from vgnav.guidance import GuidanceScheme
from vgnav.policies import make_policy
from vgnav.world import AgentState, SemanticClass, load_map_doc


def straight_map(length_cells=60, cell=2.0):
    """One long road row with named endpoints."""
    doc = {
        "version": "vgmap/1",
        "cell_size": cell,
        "width": length_cells,
        "height": 3,
        "classes": {"encoding": "rle", "data": [["road", length_cells * 3]]},
        "named_points": {
            "a": [cell * 1.5, cell * 1.5],
            "b": [cell * (length_cells - 1.5), cell * 1.5],
        },
    }
    return load_map_doc(doc)


class TestNavReward:
    def test_path_on_line_at_zero_distance(self):
        assert nav_reward(GuidanceScheme.PATH, 0.0, 0, True) == 6.0

    def test_path_off_line(self):
        assert nav_reward(GuidanceScheme.PATH, 1.0, 0, False) == -0.2

    def test_waypoint_collection(self):
        assert nav_reward(GuidanceScheme.WAYPOINTS, 0.0, 1, True) == 5.0
        assert nav_reward(GuidanceScheme.WAYPOINTS, 0.0, 3, False) == 15.0
        assert nav_reward(GuidanceScheme.WAYPOINTS, 0.0, 0, True) == 0.0

    def test_hybrid_uses_waypoint_signal(self):
        assert nav_reward(GuidanceScheme.HYBRID, 0.0, 2, True) == 10.0

    def test_clamp_floor(self):
        assert nav_reward(GuidanceScheme.PATH, 7.0, 0, True) == 0.4
        assert abs(nav_reward(GuidanceScheme.PATH, 5.6, 0, True) - 0.4) < 1e-12

    def test_clamp_interior(self):
        assert nav_reward(GuidanceScheme.PATH, 2.5, 0, True) == 3.5

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            nav_reward(GuidanceScheme.PATH, -0.1, 0, True)


class TestGoalReward:
    def test_values(self):
        assert goal_reward(Event.REACHED_GOAL) == 10.0
        assert goal_reward(Event.COLLISION) == -10.0
        assert goal_reward(Event.OOB) == -10.0
        assert goal_reward(Event.TIMEOUT) == -10.0
        assert goal_reward(Event.NONE) == 0.0


class TestTermination:
    def setup_method(self):
        self.cmap = straight_map()
        self.config = EpisodeConfig(route=("a", "b"))
        self.goal = self.cmap.named_points["b"]

    def test_at_goal(self):
        agent = AgentState(position=self.goal)
        assert check_termination(self.cmap, agent, [], self.goal, self.config) \
            == Event.REACHED_GOAL

    def test_sidewalk_is_oob(self):
        cmap = straight_map()
        cmap.classes[0, :] = int(SemanticClass.SIDEWALK)
        agent = AgentState(position=(10.0, 1.0))
        assert check_termination(cmap, agent, [], self.goal, self.config) == Event.OOB

    def test_void_is_oob(self):
        agent = AgentState(position=(-5.0, 1.0))
        assert check_termination(self.cmap, agent, [], self.goal, self.config) == Event.OOB

    def test_building_cell_is_collision(self):
        cmap = straight_map()
        cmap.classes[1, 5] = int(SemanticClass.BUILDING)
        agent = AgentState(position=cmap.cell_center(1, 5))
        assert check_termination(cmap, agent, [], self.goal, self.config) == Event.COLLISION

    def test_pedestrian_contact_is_collision(self):
        agent = AgentState(position=(20.0, 3.0))
        peds = [(20.4, 3.0, 0.3)]  # gap 0.4 < 0.5 + 0.3
        assert check_termination(self.cmap, agent, peds, self.goal, self.config) \
            == Event.COLLISION

    def test_timeout_on_road(self):
        agent = AgentState(position=(20.0, 3.0), t=self.config.horizon)
        assert check_termination(self.cmap, agent, [], self.goal, self.config) == Event.TIMEOUT

    def test_goal_beats_collision(self):
        agent = AgentState(position=self.goal)
        peds = [(self.goal[0], self.goal[1], 1.0)]
        assert check_termination(self.cmap, agent, peds, self.goal, self.config) \
            == Event.REACHED_GOAL

    def test_none_mid_route(self):
        agent = AgentState(position=(20.0, 3.0), t=3)
        assert check_termination(self.cmap, agent, [], self.goal, self.config) == Event.NONE


class TestRunEpisode:
    def test_oracle_succeeds_on_straight_route(self):
        cmap = straight_map()
        config = EpisodeConfig(route=("a", "b"), scheme=GuidanceScheme.PATH)
        result = run_episode(make_policy("pursuit"), config, cmap)
        assert result.outcome == Outcome.SUCCESS
        assert result.trajectory[-1] != result.trajectory[0]

    def test_stationary_policy_times_out_with_penalty(self):
        cmap = straight_map()
        config = EpisodeConfig(route=("a", "b"), horizon=50)
        result = run_episode(make_policy("noop"), config, cmap)
        assert result.outcome == Outcome.TIMEOUT
        assert result.steps[-1]["r_goal"] == -10.0
        assert len(result.trajectory) <= config.horizon + 1

    def test_spawn_inside_pedestrian_radius_collides_at_step_one(self):
        doc = {
            "version": "vgmap/1",
            "cell_size": 2.0,
            "width": 30,
            "height": 3,
            "classes": {"encoding": "rle", "data": [["road", 90]]},
            "named_points": {"a": [3.0, 3.0], "b": [57.0, 3.0]},
            "pedestrians": [
                {"path": [[3.4, 3.0], [3.4, 5.0]], "speed": 0.0, "radius": 0.5}
            ],
        }
        cmap = load_map_doc(doc)
        config = EpisodeConfig(route=("a", "b"), pedestrians=True)
        result = run_episode(make_policy("noop"), config, cmap)
        assert result.outcome == Outcome.COLLISION
        assert len(result.steps) == 1

    def test_cumulative_reward_is_exact_sum(self):
        cmap = straight_map()
        config = EpisodeConfig(route=("a", "b"), scheme=GuidanceScheme.WAYPOINTS)
        result = run_episode(make_policy("greedy"), config, cmap)
        total = math.fsum(s["r_nav"] + s["r_goal"] for s in result.steps)
        assert result.cumulative_reward == pytest.approx(total, abs=0.0)

    def test_per_step_rewards_within_declared_ranges(self):
        cmap = straight_map()
        for scheme, policy in (
            (GuidanceScheme.PATH, "pursuit"),
            (GuidanceScheme.WAYPOINTS, "greedy"),
            (GuidanceScheme.HYBRID, "hybrid"),
        ):
            config = EpisodeConfig(route=("a", "b"), scheme=scheme, horizon=400)
            result = run_episode(make_policy(policy), config, cmap)
            for step in result.steps:
                r = step["r_nav"]
                if scheme == GuidanceScheme.PATH:
                    assert r == -0.2 or 0.4 - 1e-12 <= r <= 6.0
                else:
                    assert r >= 0.0 and r / 5.0 == int(r / 5.0)
                assert step["r_goal"] in (0.0, 10.0, -10.0)

    def test_deterministic_trajectories(self):
        cmap = straight_map()
        config = EpisodeConfig(route=("a", "b"), scheme=GuidanceScheme.PATH, seed=5)
        r1 = run_episode(make_policy("pursuit"), config, cmap)
        r2 = run_episode(make_policy("pursuit"), config, cmap)
        assert r1.trajectory == r2.trajectory
        assert r1.cumulative_reward == r2.cumulative_reward

    def test_random_policy_rarely_succeeds_on_long_routes(self, city8):
        outcomes = []
        for seed in range(5):
            config = EpisodeConfig(route=("n1", "s1"), horizon=500, seed=seed)
            outcomes.append(run_episode(make_policy("random"), config, city8).outcome)
        assert Outcome.SUCCESS not in outcomes

    def test_random_policy_seed_changes_trajectory(self):
        cmap = straight_map()
        r1 = run_episode(
            make_policy("random"), EpisodeConfig(route=("a", "b"), horizon=60, seed=1), cmap
        )
        r2 = run_episode(
            make_policy("random"), EpisodeConfig(route=("a", "b"), horizon=60, seed=2), cmap
        )
        assert r1.trajectory != r2.trajectory

    def test_unknown_route_label_rejected(self):
        cmap = straight_map()
        from vgnav.errors import VgError

        runner = EpisodeRunner(cmap, EpisodeConfig(route=("a", "nope")), render_frames=False)
        with pytest.raises(VgError, match="nope"):
            runner.reset()

    def test_observation_stack_produced_when_rendering(self):
        cmap = straight_map()
        config = EpisodeConfig(route=("a", "b"), horizon=5)
        runner = EpisodeRunner(cmap, config, render_frames=True)
        stack = runner.reset()
        assert stack is not None
        assert stack.to_array().shape == (3, 84, 180)

    def test_step_after_done_rejected(self):
        from vgnav.errors import VgError
        from vgnav.world import NOOP

        cmap = straight_map()
        runner = EpisodeRunner(cmap, EpisodeConfig(route=("a", "b"), horizon=1),
                               render_frames=False)
        runner.reset()
        runner.step(NOOP)
        assert runner.done
        with pytest.raises(VgError):
            runner.step(NOOP)

    def test_realtime_mode_replans(self):
        from vgnav.planner import PlanMode

        cmap = straight_map()
        config = EpisodeConfig(
            route=("a", "b"), plan_mode=PlanMode("realtime", 1), horizon=400
        )
        result = run_episode(make_policy("pursuit"), config, cmap)
        assert result.outcome == Outcome.SUCCESS
        assert result.replans > 0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EpisodeConfig(route=("a", "b"), horizon=0)
        with pytest.raises(ValueError):
            EpisodeConfig(route=("a", "b"), goal_radius=0.0)
