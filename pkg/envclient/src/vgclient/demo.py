"""Random-agent demo: run N episodes against a live server, print metrics.

Also the skeleton for wiring in a real learner: everything inside the
episode loop is exactly what a training step consumes (observation in,
action out, reward and terminal back).
"""

from __future__ import annotations

import argparse
import random
from collections import Counter

from vgclient.client import connect


def run_demo(host: str, port: int, episodes: int = 10, seed: int = 0,
             horizon: int = 120, overrides: dict | None = None) -> dict:
    rng = random.Random(seed)
    outcomes = Counter()
    rewards = []
    lengths = []
    with connect(host, port) as env:
        for episode in range(episodes):
            merged = {"horizon": horizon}
            merged.update(overrides or {})
            obs, info = env.reset(seed=seed + episode, overrides=merged)
            assert obs.shape == env.observation_shape
            total = 0.0
            steps = 0
            terminal = False
            while not terminal:
                action = rng.choice(env.actions)
                # a learner would consume (obs, reward, terminal) right here
                obs, reward, terminal, info = env.step(action)
                total += reward
                steps += 1
            outcomes[info["outcome"]] += 1
            rewards.append(total)
            lengths.append(steps)
    return {
        "episodes": episodes,
        "outcomes": dict(outcomes),
        "mean_reward": sum(rewards) / len(rewards),
        "mean_steps": sum(lengths) / len(lengths),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="random-agent demo for vgenv/1")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, required=True)
    parser.add_argument("--episodes", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--horizon", type=int, default=120)
    args = parser.parse_args(argv)
    stats = run_demo(args.host, args.port, args.episodes, args.seed, args.horizon)
    print(f"episodes:    {stats['episodes']}")
    for outcome, count in sorted(stats["outcomes"].items()):
        print(f"  {outcome}: {count}")
    print(f"mean reward: {stats['mean_reward']:.2f}")
    print(f"mean steps:  {stats['mean_steps']:.1f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
