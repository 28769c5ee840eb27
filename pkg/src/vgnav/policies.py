"""Scripted policies that stand in for a trained agent.

The oracles steer from privileged state (poses and plans, never pixels)
with a shared bang-bang law: turn toward the target when the bearing error
exceeds a small deadband, otherwise hold course. They exist to validate
the environment and metrics at desk scale.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from vgnav.errors import AllCollected
from vgnav.geom import bearing, dist, point_at_arc, project_to_polyline, wrap180
from vgnav.guidance import HybridVector, next_waypoint
from vgnav.planner import PlannedPath, WaypointSet
from vgnav.world import ACTION_SET, NOOP, TURN_LEFT, TURN_RIGHT, Action, AgentState

DEADBAND_DEG = 3.0
LOOKAHEAD_M = 10.0
# Desired turn rate per degree of bearing error. Together with the
# lookahead this puts the tracking loop near critical damping while
# staying well inside the omega slew limit (7 deg/s per step).
RATE_GAIN = 1.2
# Braking curve: keep |omega| under sqrt(2*BRAKE*|err|) so rotation can be
# shed before the error closes; deliberately below the physical slew rate
# (70 deg/s^2) to leave tracking margin.
BRAKE = 50.0
# Do not chase targets closer than this; passing them collects or bypasses
# them, while chasing at close range whips the heading around.
MIN_CHASE_M = 4.0

# deg/s change of omega per TURN step under the default dynamics
TURN_INCREMENT = 35.0 * (2.0 * 0.1)


@dataclass
class PrivilegedView:
    """Everything an oracle may peek at for the current step."""

    agent: AgentState
    path: PlannedPath | None = None
    waypoints: WaypointSet | None = None
    hybrid: HybridVector | None = None


def steer_toward(agent: AgentState, target: tuple[float, float],
                 deadband: float = DEADBAND_DEG) -> Action:
    """Turn toward the target bearing; NOOP inside the deadband.

    Because angular velocity persists across steps, a plain sign-of-error
    bang-bang winds up and oscillates. The law instead tracks a desired
    rate proportional to the bearing error, capped by a braking curve so
    accumulated rotation can always be shed in time. Inside the deadband
    (or when the target is too close to chase) it unwinds leftover omega
    and settles on NOOP.
    """
    err = wrap180(bearing(agent.position, target) - agent.heading)
    omega = agent.omega
    if abs(err) <= deadband or dist(agent.position, target) < MIN_CHASE_M:
        if abs(omega) <= TURN_INCREMENT:
            return NOOP
        return TURN_LEFT if omega > 0 else TURN_RIGHT
    mag = min(90.0, RATE_GAIN * abs(err), math.sqrt(2.0 * BRAKE * abs(err)))
    omega_des = mag if err > 0 else -mag
    if omega < omega_des - TURN_INCREMENT / 2.0:
        return TURN_RIGHT
    if omega > omega_des + TURN_INCREMENT / 2.0:
        return TURN_LEFT
    # near the desired rate: keep rotating with whichever step stays closest
    if abs(omega + TURN_INCREMENT - omega_des) <= abs(omega - TURN_INCREMENT - omega_des):
        return TURN_RIGHT
    return TURN_LEFT


def pure_pursuit_path(agent: AgentState, path: PlannedPath,
                      lookahead: float = LOOKAHEAD_M,
                      deadband: float = DEADBAND_DEG) -> Action:
    """Chase the path point `lookahead` meters past the agent's projection."""
    pts = list(path.points)
    if not pts:
        raise ValueError("empty path")
    if len(pts) == 1:
        return steer_toward(agent, pts[0], deadband)
    s, _ = project_to_polyline(pts, agent.position)
    target = point_at_arc(pts, s + lookahead)
    if target == agent.position:
        return NOOP
    return steer_toward(agent, target, deadband)


def waypoint_greedy(agent: AgentState, w: WaypointSet,
                    deadband: float = DEADBAND_DEG) -> Action:
    """Steer at the closest forthcoming waypoint; NOOP once all collected."""
    try:
        target = next_waypoint(agent, w)
    except AllCollected:
        return NOOP
    if target == agent.position:
        return NOOP
    return steer_toward(agent, target, deadband)


def hybrid_follower(vec: HybridVector, deadband: float = DEADBAND_DEG) -> Action:
    """Steering from the polar vector alone."""
    if abs(vec.theta_norm) <= deadband / 180.0:
        return NOOP
    return TURN_RIGHT if vec.theta_norm > 0 else TURN_LEFT


class Policy:
    """Base class: deterministic given the seed passed to reset()."""

    name = "policy"
    needs_pixels = False

    def reset(self, seed: int = 0) -> None:
        pass

    def act(self, observation, view: PrivilegedView) -> Action:
        raise NotImplementedError


class PurePursuitPolicy(Policy):
    name = "pursuit"

    def __init__(self, lookahead: float = LOOKAHEAD_M, deadband: float = DEADBAND_DEG):
        self.lookahead = lookahead
        self.deadband = deadband

    def act(self, observation, view: PrivilegedView) -> Action:
        if view.path is None:
            return NOOP
        return pure_pursuit_path(view.agent, view.path, self.lookahead, self.deadband)


class WaypointGreedyPolicy(Policy):
    name = "greedy"

    def __init__(self, deadband: float = DEADBAND_DEG):
        self.deadband = deadband

    def act(self, observation, view: PrivilegedView) -> Action:
        if view.waypoints is None:
            return NOOP
        return waypoint_greedy(view.agent, view.waypoints, self.deadband)


class HybridFollowerPolicy(Policy):
    """Consumes only the (r, theta) vector from the view."""

    name = "hybrid"

    def __init__(self, deadband: float = DEADBAND_DEG):
        self.deadband = deadband

    def act(self, observation, view: PrivilegedView) -> Action:
        if view.hybrid is None:
            return NOOP
        return hybrid_follower(view.hybrid, self.deadband)


class RandomPolicy(Policy):
    name = "random"

    def __init__(self):
        self._rng = random.Random(0)

    def reset(self, seed: int = 0) -> None:
        self._rng = random.Random(seed)

    def act(self, observation, view: PrivilegedView) -> Action:
        return ACTION_SET[self._rng.randrange(len(ACTION_SET))]


class StationaryPolicy(Policy):
    """Always NOOP; useful for timeout and smoke tests."""

    name = "noop"

    def act(self, observation, view: PrivilegedView) -> Action:
        return NOOP


POLICIES = {
    "pursuit": PurePursuitPolicy,
    "greedy": WaypointGreedyPolicy,
    "hybrid": HybridFollowerPolicy,
    "random": RandomPolicy,
    "noop": StationaryPolicy,
}


def make_policy(name: str) -> Policy:
    """Policy by CLI name. "remote" is reserved for externally driven
    episodes via the environment server."""
    if name == "remote":
        raise ValueError("policy 'remote' is driven through `vg serve`, not in-process")
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r} (choose from {sorted(POLICIES)})") from None
