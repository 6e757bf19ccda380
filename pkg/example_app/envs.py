"""Toy environments used by the test-suite."""

import numpy as np

from s3rr.constants import DemonstratorKind
from s3rr.exceptions import ConfigError
from s3rr.services.dataclasses import SpaceSpec
from s3rr.services.environments.base import BaseEnvironment, EnvSpec, EnvState
from s3rr.services.environments.demonstrators import DemonstratorSpec


class FixedArm:
    def __init__(self, arm: int) -> None:
        self.arm = arm

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.array([float(self.arm)])


class EpsilonArm:
    """Pulls arm 0 except with probability ``epsilon``, when it picks uniformly."""

    def __init__(self, epsilon: float) -> None:
        self.epsilon = epsilon

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if rng.random() < self.epsilon:
            return np.array([float(rng.integers(2))])
        return np.array([0.0])


class TwoArmedBandit(BaseEnvironment):
    """One step from a fixed state; arm 0 pays 1, arm 1 pays 0."""

    default_demonstrator = DemonstratorKind.EPSILON_SUBOPTIMAL

    def __init__(self, alpha: float = 0.0) -> None:
        super().__init__(
            EnvSpec(
                id="bandit",
                state_space=SpaceSpec.box([0.0], [1.0]),
                action_space=SpaceSpec.discrete(2),
                horizon=1,
                gamma=1.0,
                alpha=alpha,
            )
        )

    def reset(self, rng: np.random.Generator) -> EnvState:
        return EnvState(vector=(0.0,))

    def reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(actions, dtype=float)[:, 0] == 0.0, 1.0, 0.0)

    def transition(self, vector: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, bool]:
        return vector.copy(), True

    def optimal_policy(self) -> FixedArm:
        return FixedArm(0)

    def build_demonstrator(self, demo_spec: DemonstratorSpec) -> EpsilonArm:
        if demo_spec.kind != DemonstratorKind.EPSILON_SUBOPTIMAL:
            raise ConfigError("the bandit only has epsilon demonstrators", "env.demonstrator.kind")
        return EpsilonArm(demo_spec.epsilon)
