import numpy as np

from s3rr.constants import DemonstratorKind
from s3rr.exceptions import ConfigError
from s3rr.services.dataclasses import SpaceSpec
from s3rr.services.environments.base import BaseEnvironment, EnvSpec, EnvState
from s3rr.services.environments.demonstrators import DemonstratorSpec, ProportionalController


class Reach1D(BaseEnvironment):
    """Point on a line steered toward ``goal``.

    ``x' = x + 0.1 a``, ``a`` clipped to ``[-1, 1]``; reward
    ``-(x - goal)^2 - 0.01 a^2`` at the pre-step position.
    """

    GOAL = 1.0
    STEP_SCALE = 0.1
    ACTION_COST = 0.01
    START_HALF_WIDTH = 0.1
    default_demonstrator = DemonstratorKind.NOISY_PROPORTIONAL

    def __init__(
        self,
        horizon: int = 50,
        gamma: float = 0.99,
        alpha: float = 0.01,
        start: str = "uniform",
    ) -> None:
        if start not in ("uniform", "point"):
            raise ConfigError(f"unknown start distribution {start!r}", "env.start")
        super().__init__(
            EnvSpec(
                id="reach1d",
                state_space=SpaceSpec.box([-10.0], [10.0]),
                action_space=SpaceSpec.box([-1.0], [1.0]),
                horizon=horizon,
                gamma=gamma,
                alpha=alpha,
            )
        )
        self.start = start

    def reset(self, rng: np.random.Generator) -> EnvState:
        if self.start == "point":
            return EnvState(vector=(0.0,))
        x0 = rng.uniform(-self.START_HALF_WIDTH, self.START_HALF_WIDTH)
        return EnvState(vector=(float(x0),))

    def reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        x = np.asarray(states, dtype=float)[:, 0]
        a = np.clip(np.asarray(actions, dtype=float)[:, 0], -1.0, 1.0)
        return -((x - self.GOAL) ** 2) - self.ACTION_COST * a**2

    def transition(self, vector: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, bool]:
        return vector + self.STEP_SCALE * action, False

    def optimal_policy(self) -> ProportionalController:
        return ProportionalController(goal=self.GOAL, gain=10.0, noise=0.0)

    def build_demonstrator(self, demo_spec: DemonstratorSpec) -> ProportionalController:
        if demo_spec.kind != DemonstratorKind.NOISY_PROPORTIONAL:
            raise ConfigError(
                f"reach1d supports noisy_proportional demonstrators, not {demo_spec.kind.value}",
                "env.demonstrator.kind",
            )
        return ProportionalController(goal=self.GOAL, gain=demo_spec.gain, noise=demo_spec.noise)
