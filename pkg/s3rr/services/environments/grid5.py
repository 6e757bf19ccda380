import numpy as np

from s3rr.constants import DemonstratorKind
from s3rr.exceptions import ConfigError
from s3rr.services.dataclasses import SpaceSpec
from s3rr.services.environments.base import BaseEnvironment, EnvSpec, EnvState
from s3rr.services.environments.demonstrators import (
    DemonstratorSpec,
    EpsilonSuboptimalPolicy,
    TabularPolicy,
)


UP, RIGHT, DOWN, LEFT = range(4)
MOVES = {UP: (-1, 0), RIGHT: (0, 1), DOWN: (1, 0), LEFT: (0, -1)}


class Grid5(BaseEnvironment):
    """5x5 grid, start (0, 0), absorbing goal (4, 4).

    Every step costs -1, except the step taken from the goal cell, which pays
    +10 and ends the episode.
    """

    SIZE = 5
    START = (0, 0)
    GOAL = (4, 4)
    STEP_REWARD = -1.0
    GOAL_REWARD = 10.0
    default_demonstrator = DemonstratorKind.EPSILON_SUBOPTIMAL

    def __init__(self, horizon: int = 25, gamma: float = 0.95, alpha: float = 0.05) -> None:
        top = float(self.SIZE - 1)
        super().__init__(
            EnvSpec(
                id="grid5",
                state_space=SpaceSpec.box([0.0, 0.0], [top, top]),
                action_space=SpaceSpec.discrete(len(MOVES)),
                horizon=horizon,
                gamma=gamma,
                alpha=alpha,
            )
        )

    def reset(self, rng: np.random.Generator) -> EnvState:
        return EnvState(vector=tuple(float(v) for v in self.START))

    def _at_goal(self, states: np.ndarray) -> np.ndarray:
        return np.all(np.rint(states) == np.array(self.GOAL), axis=-1)

    def reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        at_goal = self._at_goal(np.asarray(states, dtype=float))
        return np.where(at_goal, self.GOAL_REWARD, self.STEP_REWARD)

    def transition(self, vector: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, bool]:
        if self._at_goal(vector):
            return vector.copy(), True
        d_row, d_col = MOVES[int(action[0])]
        row = min(max(int(vector[0]) + d_row, 0), self.SIZE - 1)
        col = min(max(int(vector[1]) + d_col, 0), self.SIZE - 1)
        return np.array([row, col], dtype=float), False

    def value_iteration(self, tolerance: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
        """Optimal values and greedy actions (lowest action index wins ties)."""
        gamma = self.spec.gamma
        values = np.zeros((self.SIZE, self.SIZE))
        while True:
            q_values = self._q_values(values, gamma)
            updated = q_values.max(axis=-1)
            updated[self.GOAL] = self.GOAL_REWARD
            if np.max(np.abs(updated - values)) < tolerance:
                values = updated
                break
            values = updated
        actions = self._q_values(values, gamma).argmax(axis=-1)
        return values, actions

    def _q_values(self, values: np.ndarray, gamma: float) -> np.ndarray:
        q_values = np.empty((self.SIZE, self.SIZE, len(MOVES)))
        for row in range(self.SIZE):
            for col in range(self.SIZE):
                for action in MOVES:
                    next_vector, _ = self.transition(np.array([row, col], float), np.array([action]))
                    next_row, next_col = (int(v) for v in next_vector)
                    q_values[row, col, action] = (
                        self.STEP_REWARD + gamma * values[next_row, next_col]
                    )
        return q_values

    def optimal_policy(self) -> TabularPolicy:
        _, actions = self.value_iteration()
        return TabularPolicy(actions)

    def build_demonstrator(self, demo_spec: DemonstratorSpec) -> EpsilonSuboptimalPolicy:
        if demo_spec.kind != DemonstratorKind.EPSILON_SUBOPTIMAL:
            raise ConfigError(
                f"grid5 supports epsilon_suboptimal demonstrators, not {demo_spec.kind.value}",
                "env.demonstrator.kind",
            )
        return EpsilonSuboptimalPolicy(
            self.optimal_policy(), self.spec.action_space, demo_spec.epsilon
        )
