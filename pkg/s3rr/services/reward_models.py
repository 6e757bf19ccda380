import hashlib
import json
from typing import TYPE_CHECKING, Any

import numpy as np

from s3rr.exceptions import DimensionMismatchError
from s3rr.model_factory import ApproximatorSpec, ParamVector, init_params, zero_params
from s3rr.services.approximators.mlp import forward, gradient
from s3rr.services.dataclasses import SpaceSpec, Trajectory


if TYPE_CHECKING:
    from s3rr.services.environments.base import BaseEnvironment


class ApproximatorReward:
    """Scalar reward network over ``concat(state, encode(action))``.

    Serves as AIRL's f_θ (the initial reward R̃) and as the regressed R_θ.
    """

    def __init__(
        self,
        spec: ApproximatorSpec,
        params: ParamVector,
        state_space: SpaceSpec,
        action_space: SpaceSpec,
    ) -> None:
        expected = state_space.dim + action_space.encoding_dim
        if spec.input_dim != expected or spec.output_dim != 1:
            raise DimensionMismatchError(
                f"reward network must map {expected} inputs to 1 output, got {spec}"
            )
        self.spec = spec
        self.params = params
        self.state_space = state_space
        self.action_space = action_space

    def inputs(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        encoded = self.action_space.encode(actions)
        if states.shape[0] != encoded.shape[0]:
            raise DimensionMismatchError(
                f"{states.shape[0]} states paired with {encoded.shape[0]} actions"
            )
        if states.shape[1] != self.state_space.dim:
            raise DimensionMismatchError(
                f"reward model expects states of width {self.state_space.dim}, got {states.shape[1]}"
            )
        return np.hstack([states, encoded])

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return forward(self.spec, self.params, self.inputs(states, actions))[:, 0]

    def gradient(self, states: np.ndarray, actions: np.ndarray, upstream: np.ndarray) -> np.ndarray:
        upstream = np.asarray(upstream, dtype=float).reshape(-1, 1)
        return gradient(self.spec, self.params, self.inputs(states, actions), upstream)

    def with_values(self, values: np.ndarray) -> "ApproximatorReward":
        return ApproximatorReward(
            self.spec, self.params.with_values(values), self.state_space, self.action_space
        )

    def with_output_affine(self, scale: float, offset: float) -> "ApproximatorReward":
        """The model whose every output is ``scale * R(s, a) + offset``."""
        slot = self.params.layout[-1]
        values = self.params.values.copy()
        weights_end = slot.offset + slot.weight_size
        values[slot.offset : slot.end] *= scale
        values[weights_end : slot.end] += offset
        return self.with_values(values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "params": [float(v) for v in self.params.values],
            "state_space": self.state_space.to_dict(),
            "action_space": self.action_space.to_dict(),
        }

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True, allow_nan=False)
        return hashlib.sha256(payload.encode()).hexdigest()


class GroundTruthReward:
    """The environment's hidden reward behind the reward-model interface (evaluation only)."""

    def __init__(self, env: "BaseEnvironment") -> None:
        self.env = env

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.env.reward(np.atleast_2d(states), np.atleast_2d(actions))


def build_reward_model(
    state_space: SpaceSpec,
    action_space: SpaceSpec,
    hidden_layers: int,
    hidden_width: int,
    rng: np.random.Generator | None = None,
) -> ApproximatorReward:
    """Randomly initialised reward network, or all-zero when ``rng`` is None."""
    spec = ApproximatorSpec(
        input_dim=state_space.dim + action_space.encoding_dim,
        output_dim=1,
        hidden_layers=hidden_layers,
        hidden_width=hidden_width,
    )
    params = zero_params(spec) if rng is None else init_params(spec, rng)
    return ApproximatorReward(spec, params, state_space, action_space)


def score_trajectory(reward_model: ApproximatorReward, trajectory: Trajectory) -> Trajectory:
    """Fill ``initial_rewards[t] = R̃(s_t, a_t)``; other fields are untouched."""
    rewards = reward_model(trajectory.state_array, trajectory.action_array)
    return trajectory.with_initial_rewards(rewards)
