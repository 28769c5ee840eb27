"""Episode loop: plan, guide, render, act, reward, terminate.

EpisodeRunner exposes the loop stepwise (reset/step) for the environment
server; run_episode drives it with an in-process policy. Rendering is
skipped automatically for policies that never look at pixels, which keeps
oracle evaluations fast without changing any dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from vgnav.errors import VgError
from vgnav.geom import bearing, dist, distance_to_polyline
from vgnav.guidance import (
    COLLECTION_RADIUS,
    GuidanceScheme,
    geometry_for,
    hybrid_vector,
    update_collection,
)
from vgnav.planner import (
    DEFAULT_WAYPOINT_SPACING,
    ONE_TIME,
    PlanMode,
    PlannedPath,
    WaypointSet,
    extract_waypoints,
    plan_for_step,
)
from vgnav.policies import Policy, PrivilegedView
from vgnav.render import CameraModel, ObservationStack, push_frame, render_frame
from vgnav.world import (
    DT,
    KAPPA,
    OMEGA_MAX,
    SPEED,
    AgentState,
    Action,
    CityMap,
    SemanticClass,
    pedestrian_pose,
    query_class,
    step_dynamics,
)


class Outcome(str, Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    OUT_OF_BOUND = "out_of_bound"
    TIMEOUT = "timeout"


class Event(str, Enum):
    REACHED_GOAL = "reached_goal"
    COLLISION = "collision"
    OOB = "oob"
    TIMEOUT = "timeout"
    NONE = "none"


_EVENT_OUTCOME = {
    Event.REACHED_GOAL: Outcome.SUCCESS,
    Event.COLLISION: Outcome.COLLISION,
    Event.OOB: Outcome.OUT_OF_BOUND,
    Event.TIMEOUT: Outcome.TIMEOUT,
}


@dataclass(frozen=True)
class RewardTerms:
    r_nav: float
    r_goal: float

    @property
    def total(self) -> float:
        return self.r_nav + self.r_goal


@dataclass
class EpisodeConfig:
    route: tuple[str, str]
    scheme: GuidanceScheme = GuidanceScheme.PATH
    plan_mode: PlanMode = ONE_TIME
    horizon: int = 3000
    seed: int = 0
    pedestrians: bool = False
    ped_speed_scale: float = 1.0
    on_line_threshold: float = 3.0   # m, "on the navigation line" band
    goal_radius: float = 2.0
    collision_radius: float = 0.5
    collect_radius: float = COLLECTION_RADIUS
    waypoint_spacing: float = DEFAULT_WAYPOINT_SPACING
    dt: float = DT
    speed: float = SPEED
    kappa: float = KAPPA
    omega_max: float = OMEGA_MAX
    path_window: float = math.inf
    camera: CameraModel = field(default_factory=CameraModel)
    render: Optional[bool] = None    # None = follow the policy's needs

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for name in ("goal_radius", "collision_radius", "collect_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class EpisodeResult:
    outcome: Outcome
    trajectory: list[tuple[float, float]]
    cumulative_reward: float
    waypoints_collected: int
    waypoints_total: int
    shortest_length: float
    initial_path: PlannedPath
    initial_waypoints: list[tuple[float, float]]
    replans: int
    steps: list[dict]
    route: tuple[str, str]
    scheme: GuidanceScheme
    seed: int

    @property
    def traveled_length(self) -> float:
        return math.fsum(
            dist(self.trajectory[i], self.trajectory[i + 1])
            for i in range(len(self.trajectory) - 1)
        )


def nav_reward(scheme: GuidanceScheme, d_prime: float, newly_collected: int,
               on_line: bool) -> float:
    """Per-step navigation reward.

    Path scheme: clamp(6 - d', 0.4, 6.0) while on the line, -0.2 otherwise.
    Waypoint-based schemes (waypoints and the hybrid baseline trained on
    waypoints): 5.0 per waypoint reached this step.
    """
    if d_prime < 0:
        raise ValueError("d_prime must be >= 0")
    if scheme == GuidanceScheme.PATH:
        if on_line:
            return min(max(6.0 - d_prime, 0.4), 6.0)
        return -0.2
    return 5.0 * newly_collected


def goal_reward(event: Event) -> float:
    """Terminal reward: +10 on success, -10 on any failure, 0 otherwise."""
    if event == Event.REACHED_GOAL:
        return 10.0
    if event in (Event.COLLISION, Event.OOB, Event.TIMEOUT):
        return -10.0
    return 0.0


def check_termination(
    cmap: CityMap,
    agent: AgentState,
    pedestrians,
    destination: tuple[float, float],
    config: EpisodeConfig,
) -> Event:
    """Terminal event at the agent's current state.

    `pedestrians` is a sequence of (x, y, radius) at the current time.
    Precedence: reaching the goal beats collision beats out-of-bound beats
    timeout.
    """
    if dist(agent.position, destination) <= config.goal_radius:
        return Event.REACHED_GOAL
    cell_class = query_class(cmap, agent.position)
    for px, py, pr in pedestrians:
        if dist(agent.position, (px, py)) <= config.collision_radius + pr:
            return Event.COLLISION
    if cell_class == SemanticClass.BUILDING:
        return Event.COLLISION
    if cell_class in (SemanticClass.SIDEWALK, SemanticClass.VOID):
        return Event.OOB
    if agent.t >= config.horizon:
        return Event.TIMEOUT
    return Event.NONE


class EpisodeRunner:
    """One episode, advanced step by step.

    reset() returns the first observation; step() applies an action and
    returns (observation, reward terms, event, info). Deterministic for a
    fixed (map, config, action sequence).
    """

    def __init__(self, cmap: CityMap, config: EpisodeConfig, render_frames: bool = True):
        self.cmap = cmap
        self.config = config
        self.render_frames = render_frames
        self.done = True

    def _ped_states(self, t_index: int):
        if not self.config.pedestrians:
            return []
        # a speed scale k is the same as running the walk clock k times faster
        t = t_index * self.config.dt * self.config.ped_speed_scale
        out = []
        for ped in self.cmap.pedestrians:
            x, y = pedestrian_pose(ped, t)
            out.append((x, y, ped.radius))
        return out

    def _resolve(self, label: str) -> tuple[float, float]:
        try:
            return self.cmap.named_points[label]
        except KeyError:
            raise VgError(f"route endpoint {label!r} is not a named point") from None

    def reset(self) -> Optional[ObservationStack]:
        cfg = self.config
        self.start = self._resolve(cfg.route[0])
        self.goal = self._resolve(cfg.route[1])
        agent0 = AgentState(position=self.start, heading=0.0, speed=cfg.speed, t=0)
        self.path = plan_for_step(cfg.plan_mode, self.cmap, agent0, self.start, self.goal, None)
        heading0 = 0.0
        if len(self.path.points) >= 2:
            heading0 = bearing(self.path.points[0], self.path.points[1])
        self.agent = AgentState(position=self.start, heading=heading0, speed=cfg.speed, t=0)
        self.initial_path = self.path
        self.waypoints = extract_waypoints(self.path, cfg.waypoint_spacing)
        self.initial_waypoints = list(self.waypoints.waypoints)
        self.waypoints_total = self.waypoints.total
        self.carried_collected = 0
        self.replans = 0
        self.trajectory = [self.agent.position]
        self.steps: list[dict] = []
        self.reward_terms: list[float] = []
        self.outcome: Optional[Outcome] = None
        self.done = False
        self.stack = None
        if self.render_frames:
            frame = self._render()
            self.stack = ObservationStack.reset(frame)
        return self.stack

    def _render(self):
        geom = geometry_for(
            self.config.scheme, self.path, self.waypoints,
            agent=self.agent, window=self.config.path_window,
        )
        peds = [(x, y) for x, y, _ in self._ped_states(self.agent.t)]
        return render_frame(self.cmap, peds, self.agent, geom, self.config.camera)

    def view(self) -> PrivilegedView:
        hv = None
        if self.waypoints.uncollected():
            hv = hybrid_vector(self.agent, self.waypoints)
        return PrivilegedView(
            agent=self.agent, path=self.path, waypoints=self.waypoints, hybrid=hv,
        )

    @property
    def collected_total(self) -> int:
        return self.carried_collected + self.waypoints.collected_count

    def step(self, action: Action):
        if self.done:
            raise VgError("episode is finished; reset before stepping")
        cfg = self.config
        self.agent = step_dynamics(
            self.agent, action, cfg.dt, cfg.kappa, cfg.omega_max
        )
        self.trajectory.append(self.agent.position)

        self.waypoints, newly = update_collection(
            self.agent, self.waypoints, cfg.collect_radius
        )
        d_prime = distance_to_polyline(list(self.path.points), self.agent.position)
        on_line = d_prime <= cfg.on_line_threshold
        r_nav = nav_reward(cfg.scheme, d_prime, newly, on_line)

        event = check_termination(
            self.cmap, self.agent, self._ped_states(self.agent.t), self.goal, cfg
        )
        r_goal = goal_reward(event)
        terms = RewardTerms(r_nav=r_nav, r_goal=r_goal)
        self.reward_terms.append(terms.total)

        self.steps.append(
            {
                "t": self.agent.t,
                "x": self.agent.position[0],
                "y": self.agent.position[1],
                "heading": self.agent.heading,
                "omega": self.agent.omega,
                "action": action.kind if action.kind == "noop" else f"turn({action.alpha:g})",
                "r_nav": r_nav,
                "r_goal": r_goal,
                "d_prime": d_prime,
                "collected": newly,
                "event": event.value,
            }
        )

        if event != Event.NONE:
            self.done = True
            self.outcome = _EVENT_OUTCOME[event]
        else:
            new_path = plan_for_step(
                cfg.plan_mode, self.cmap, self.agent, self.start, self.goal, self.path
            )
            if new_path is not self.path:
                self.path = new_path
                self.replans += 1
                self.carried_collected += self.waypoints.collected_count
                self.waypoints = extract_waypoints(new_path, cfg.waypoint_spacing)

        if self.render_frames:
            self.stack = push_frame(self.stack, self._render())

        info = {
            "d_prime": d_prime,
            "collected": self.collected_total,
            "outcome": self.outcome.value if self.outcome else None,
        }
        return self.stack, terms, event, info

    def result(self) -> EpisodeResult:
        if self.outcome is None:
            raise VgError("episode has not terminated")
        return EpisodeResult(
            outcome=self.outcome,
            trajectory=self.trajectory,
            # fsum: the cumulative reward is the correctly-rounded sum of the
            # logged per-step rewards, independent of accumulation order
            cumulative_reward=math.fsum(self.reward_terms),
            waypoints_collected=self.collected_total,
            waypoints_total=self.waypoints_total,
            shortest_length=self.initial_path.length,
            initial_path=self.initial_path,
            initial_waypoints=self.initial_waypoints,
            replans=self.replans,
            steps=self.steps,
            route=self.config.route,
            scheme=self.config.scheme,
            seed=self.config.seed,
        )


def run_episode(policy: Policy, config: EpisodeConfig, cmap: CityMap) -> EpisodeResult:
    """Run one full episode with an in-process policy."""
    wants_pixels = config.render if config.render is not None else policy.needs_pixels
    runner = EpisodeRunner(cmap, config, render_frames=wants_pixels)
    policy.reset(config.seed)
    obs = runner.reset()
    while not runner.done:
        action = policy.act(obs, runner.view())
        obs, _, _, _ = runner.step(action)
    return runner.result()
