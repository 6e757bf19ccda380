import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from s3rr.constants import DemonstratorKind
from s3rr.seeding import draw_seed
from s3rr.services.dataclasses import SpaceSpec, Trajectory
from s3rr.services.environments.rollouts import collect_rollouts, mean_gt_return
from s3rr.services.policies.mixture import UniformPolicy


if TYPE_CHECKING:
    from s3rr.services.environments.base import BaseEnvironment


logger = logging.getLogger(__name__)

SANDWICH_MIN_ROLLOUTS = 20


@dataclass(frozen=True)
class DemonstratorSpec:
    kind: DemonstratorKind
    gain: float = 2.0
    noise: float = 0.3
    epsilon: float = 0.3

    def __post_init__(self) -> None:
        if self.noise < 0:
            raise ValueError(f"demonstrator noise must be >= 0, got {self.noise}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"demonstrator epsilon must lie in [0, 1], got {self.epsilon}")


class ProportionalController:
    """``a = clip(gain * (goal - x) + noise * N(0, 1), -1, 1)`` on the first state coordinate."""

    def __init__(self, goal: float, gain: float, noise: float = 0.0) -> None:
        self.goal = goal
        self.gain = gain
        self.noise = noise

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        action = self.gain * (self.goal - state[0])
        if self.noise > 0:
            action += self.noise * rng.standard_normal()
        return np.array([min(max(action, -1.0), 1.0)])


class TabularPolicy:
    """Deterministic lookup of one discrete action per grid cell."""

    def __init__(self, actions: np.ndarray) -> None:
        self.actions = np.asarray(actions, dtype=int)

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        row, col = (int(round(v)) for v in state)
        return np.array([float(self.actions[row, col])])


class EpsilonSuboptimalPolicy:
    def __init__(self, base: TabularPolicy, action_space: SpaceSpec, epsilon: float) -> None:
        self.base = base
        self.action_space = action_space
        self.epsilon = epsilon

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.epsilon > 0 and rng.random() < self.epsilon:
            return self.action_space.sample_uniform(rng)
        return self.base.draw(state, rng)


def check_suboptimality(
    env: "BaseEnvironment",
    demonstrations: list[Trajectory],
    rng: np.random.Generator,
    rollouts: int = SANDWICH_MIN_ROLLOUTS,
) -> str | None:
    """Random mean < demonstration mean < scripted-optimal mean, or a message saying otherwise."""
    n = max(rollouts, len(demonstrations))
    optimal_mean = mean_gt_return(collect_rollouts(env, env.optimal_policy(), n, draw_seed(rng)))
    random_policy = UniformPolicy(env.spec.action_space)
    random_mean = mean_gt_return(collect_rollouts(env, random_policy, n, draw_seed(rng)))
    demo_mean = mean_gt_return(demonstrations)
    if random_mean < demo_mean < optimal_mean:
        return None
    return (
        f"{env.id}: demonstrations are not strictly between random and optimal "
        f"(random={random_mean:.4f}, demos={demo_mean:.4f}, optimal={optimal_mean:.4f})"
    )


def make_demonstrations(
    env: "BaseEnvironment",
    demo_spec: DemonstratorSpec,
    n: int,
    rng: np.random.Generator,
    warnings: list[str] | None = None,
) -> list[Trajectory]:
    if n < 1:
        raise ValueError(f"need at least one demonstration, got n={n}")
    demonstrator = env.build_demonstrator(demo_spec)
    demonstrations = collect_rollouts(env, demonstrator, n, draw_seed(rng))
    message = check_suboptimality(env, demonstrations, rng)
    if message is not None:
        logger.warning("Suboptimality check failed: %s", message)
        if warnings is not None:
            warnings.append(message)
    logger.info(
        "Generated %d %s demonstrations on %s, mean return %.4f",
        n,
        demo_spec.kind.value,
        env.id,
        mean_gt_return(demonstrations),
    )
    return demonstrations
