import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

import numpy as np

from s3rr.constants import DemonstratorKind
from s3rr.exceptions import EnvContractError
from s3rr.services.dataclasses import SpaceSpec


if TYPE_CHECKING:
    from s3rr.services.environments.demonstrators import DemonstratorSpec


@dataclass(frozen=True)
class EnvSpec:
    id: str  # noqa: A003
    state_space: SpaceSpec
    action_space: SpaceSpec
    horizon: int
    gamma: float
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")


@dataclass(frozen=True)
class EnvState:
    vector: tuple[float, ...]
    step_index: int = 0
    terminal: bool = False

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.vector):
            raise EnvContractError(f"state contains non-finite values: {self.vector}")
        if self.step_index < 0:
            raise EnvContractError(f"negative step index {self.step_index}")

    @property
    def array(self) -> np.ndarray:
        return np.array(self.vector, dtype=float)


class ActionSource(Protocol):
    """Anything that can act in an environment: learned policies, scripted
    controllers and demonstrators alike. ``draw`` returns the action vector as
    emitted (continuous actions may lie outside the bounds; the environment clips).
    """

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray: ...


class BaseEnvironment(ABC):
    spec: EnvSpec
    default_demonstrator: DemonstratorKind

    def __init__(self, spec: EnvSpec) -> None:
        self.spec = spec

    @property
    def id(self) -> str:  # noqa: A003
        return self.spec.id

    @abstractmethod
    def reset(self, rng: np.random.Generator) -> EnvState:
        """Draw a start state from the environment's initial distribution."""

    @abstractmethod
    def reward(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Ground-truth reward of each ``(states[i], actions[i])`` pair (pre-step timing)."""

    @abstractmethod
    def transition(self, vector: np.ndarray, action: np.ndarray) -> tuple[np.ndarray, bool]:
        """Next state vector and whether the episode reached an absorbing end."""

    @abstractmethod
    def optimal_policy(self) -> ActionSource:
        """Scripted controller used as the performance ceiling in checks."""

    @abstractmethod
    def build_demonstrator(self, demo_spec: "DemonstratorSpec") -> ActionSource:
        """Suboptimal scripted demonstrator standing in for an end-user."""

    def validate_action(self, action: np.ndarray) -> np.ndarray:
        action = np.asarray(action, dtype=float).reshape(-1)
        space = self.spec.action_space
        if action.size != space.vector_dim:
            raise EnvContractError(
                f"{self.id}: action of width {action.size}, expected {space.vector_dim}"
            )
        if space.is_discrete:
            index = action[0]
            if index != int(index) or not 0 <= index < space.cardinality:
                raise EnvContractError(f"{self.id}: invalid discrete action {index}")
        return space.clip(action)

    def step(self, state: EnvState, action: np.ndarray) -> tuple[EnvState, float, bool]:
        if state.terminal or state.step_index >= self.spec.horizon:
            raise EnvContractError(
                f"{self.id}: step called after the episode ended (step {state.step_index})"
            )
        clipped = self.validate_action(action)
        vector = state.array
        gt_reward = float(self.reward(vector[None, :], clipped[None, :])[0])
        next_vector, absorbed = self.transition(vector, clipped)
        step_index = state.step_index + 1
        done = absorbed or step_index == self.spec.horizon
        next_state = EnvState(
            vector=tuple(float(v) for v in next_vector), step_index=step_index, terminal=done
        )
        return next_state, gt_reward, done
