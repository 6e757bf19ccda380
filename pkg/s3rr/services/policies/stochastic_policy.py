import math
from abc import ABC, abstractmethod

import numpy as np
from scipy.special import log_softmax

from s3rr.constants import MIN_LOG_STD, OutputTransform, PolicyHead
from s3rr.exceptions import DimensionMismatchError, SpaceError
from s3rr.model_factory import ApproximatorSpec, ParamVector, init_params
from s3rr.services.approximators.mlp import forward, gradient, l1_penalty
from s3rr.services.dataclasses import SpaceSpec


HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


class StochasticPolicy(ABC):
    """π_φ(a|s) on top of an MLP.

    ``flat_params`` is the full trainable vector φ (network values, then any
    head-specific extras); ``network_params`` is the part the L1 sparsity
    penalty applies to.
    """

    head: PolicyHead

    def __init__(self, spec: ApproximatorSpec, params: ParamVector, action_space: SpaceSpec) -> None:
        if params.spec != spec:
            raise DimensionMismatchError("policy parameters do not match the approximator spec")
        self.spec = spec
        self.params = params
        self.action_space = action_space

    def _states(self, states: np.ndarray) -> np.ndarray:
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if states.shape[1] != self.spec.input_dim:
            raise DimensionMismatchError(
                f"policy expects states of width {self.spec.input_dim}, got {states.shape[1]}"
            )
        return states

    @property
    def network_params(self) -> np.ndarray:
        return self.params.values

    @property
    @abstractmethod
    def flat_params(self) -> np.ndarray: ...

    @abstractmethod
    def with_flat_params(self, values: np.ndarray) -> "StochasticPolicy": ...

    @abstractmethod
    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Action as emitted, before any clipping to the action bounds."""

    @abstractmethod
    def log_densities(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def entropies(self, states: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def grad_log_density(
        self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        """Gradient of ``sum_i weights[i] * log π(actions[i] | states[i])`` w.r.t. ``flat_params``."""

    @abstractmethod
    def grad_entropy(self, states: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Gradient of ``sum_i weights[i] * H(π(·|states[i]))`` w.r.t. ``flat_params``."""

    def sample(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.action_space.clip(self.draw(state, rng))

    def log_density(self, state: np.ndarray, action: np.ndarray) -> float:
        action = np.asarray(action, dtype=float).reshape(1, -1)
        return float(self.log_densities(np.asarray(state, dtype=float)[None, :], action)[0])

    def entropy(self, state: np.ndarray) -> float:
        return float(self.entropies(np.asarray(state, dtype=float)[None, :])[0])

    def l1_norm(self) -> float:
        value, _ = l1_penalty(self.network_params)
        return value

    def l1_subgradient(self) -> np.ndarray:
        """Subgradient of ``||φ||_1`` laid out like ``flat_params`` (zero outside the network)."""
        _, subgradient = l1_penalty(self.network_params)
        full = np.zeros_like(self.flat_params)
        full[: subgradient.size] = subgradient
        return full


class CategoricalPolicy(StochasticPolicy):
    head = PolicyHead.CATEGORICAL

    def __init__(self, spec: ApproximatorSpec, params: ParamVector, action_space: SpaceSpec) -> None:
        if not action_space.is_discrete:
            raise SpaceError("categorical policies need a discrete action space")
        if spec.output_dim != action_space.cardinality:
            raise DimensionMismatchError(
                f"categorical head has {spec.output_dim} logits for "
                f"{action_space.cardinality} actions"
            )
        super().__init__(spec, params, action_space)

    @property
    def flat_params(self) -> np.ndarray:
        return self.params.values

    def with_flat_params(self, values: np.ndarray) -> "CategoricalPolicy":
        return CategoricalPolicy(self.spec, self.params.with_values(values), self.action_space)

    def log_probabilities(self, states: np.ndarray) -> np.ndarray:
        return log_softmax(forward(self.spec, self.params, self._states(states)), axis=1)

    def probabilities(self, state: np.ndarray) -> np.ndarray:
        return np.exp(self.log_probabilities(state)[0])

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        probabilities = self.probabilities(state)
        return np.array([float(rng.choice(probabilities.size, p=probabilities))])

    def _indices(self, actions: np.ndarray) -> np.ndarray:
        return np.asarray(actions, dtype=float).reshape(-1).astype(int)

    def log_densities(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        log_p = self.log_probabilities(states)
        return log_p[np.arange(log_p.shape[0]), self._indices(actions)]

    def entropies(self, states: np.ndarray) -> np.ndarray:
        log_p = self.log_probabilities(states)
        return -(np.exp(log_p) * log_p).sum(axis=1)

    def grad_log_density(
        self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        states = self._states(states)
        p = np.exp(self.log_probabilities(states))
        upstream = -p
        upstream[np.arange(p.shape[0]), self._indices(actions)] += 1.0
        upstream *= np.asarray(weights, dtype=float)[:, None]
        return gradient(self.spec, self.params, states, upstream)

    def grad_entropy(self, states: np.ndarray, weights: np.ndarray) -> np.ndarray:
        states = self._states(states)
        log_p = self.log_probabilities(states)
        p = np.exp(log_p)
        entropy = -(p * log_p).sum(axis=1, keepdims=True)
        upstream = -p * (log_p + entropy) * np.asarray(weights, dtype=float)[:, None]
        return gradient(self.spec, self.params, states, upstream)


class GaussianPolicy(StochasticPolicy):
    """Diagonal normal with a state-dependent mean and a learned, state-independent log-std."""

    head = PolicyHead.GAUSSIAN

    def __init__(
        self,
        spec: ApproximatorSpec,
        params: ParamVector,
        action_space: SpaceSpec,
        log_std: np.ndarray,
    ) -> None:
        if action_space.is_discrete:
            raise SpaceError("gaussian policies need a continuous action space")
        if spec.output_dim != action_space.dim:
            raise DimensionMismatchError(
                f"gaussian head has {spec.output_dim} outputs for a {action_space.dim}-d action"
            )
        log_std = np.maximum(np.array(log_std, dtype=float).reshape(-1), MIN_LOG_STD)
        if log_std.size != action_space.dim or not np.all(np.isfinite(log_std)):
            raise DimensionMismatchError("log_std must be finite with one entry per action dim")
        log_std.flags.writeable = False
        super().__init__(spec, params, action_space)
        self.log_std = log_std

    @property
    def flat_params(self) -> np.ndarray:
        return np.concatenate([self.params.values, self.log_std])

    def with_flat_params(self, values: np.ndarray) -> "GaussianPolicy":
        split = self.params.values.size
        return GaussianPolicy(
            self.spec, self.params.with_values(values[:split]), self.action_space, values[split:]
        )

    def means(self, states: np.ndarray) -> np.ndarray:
        return forward(self.spec, self.params, self._states(states))

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean = self.means(state)[0]
        return mean + np.exp(self.log_std) * rng.standard_normal(mean.size)

    def log_densities(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray:
        actions = np.asarray(actions, dtype=float).reshape(-1, self.action_space.dim)
        z = (actions - self.means(states)) / np.exp(self.log_std)
        return (-0.5 * z**2 - self.log_std - HALF_LOG_TWO_PI).sum(axis=1)

    def entropies(self, states: np.ndarray) -> np.ndarray:
        n = self._states(states).shape[0]
        return np.full(n, float(np.sum(self.log_std + HALF_LOG_TWO_PI + 0.5)))

    def grad_log_density(
        self, states: np.ndarray, actions: np.ndarray, weights: np.ndarray
    ) -> np.ndarray:
        states = self._states(states)
        actions = np.asarray(actions, dtype=float).reshape(-1, self.action_space.dim)
        weights = np.asarray(weights, dtype=float)[:, None]
        variance = np.exp(2.0 * self.log_std)
        residual = actions - self.means(states)
        network_grad = gradient(self.spec, self.params, states, weights * residual / variance)
        log_std_grad = (weights * (residual**2 / variance - 1.0)).sum(axis=0)
        return np.concatenate([network_grad, log_std_grad])

    def grad_entropy(self, states: np.ndarray, weights: np.ndarray) -> np.ndarray:
        total = float(np.sum(weights))
        network_grad = np.zeros(self.params.values.size)
        return np.concatenate([network_grad, np.full(self.action_space.dim, total)])


def build_policy(
    state_space: SpaceSpec,
    action_space: SpaceSpec,
    hidden_layers: int,
    hidden_width: int,
    rng: np.random.Generator,
    init_log_std: float = -0.5,
) -> StochasticPolicy:
    if action_space.is_discrete:
        spec = ApproximatorSpec(
            input_dim=state_space.dim,
            output_dim=action_space.cardinality,
            hidden_layers=hidden_layers,
            hidden_width=hidden_width,
            output_transform=OutputTransform.LOGITS,
        )
        return CategoricalPolicy(spec, init_params(spec, rng), action_space)
    spec = ApproximatorSpec(
        input_dim=state_space.dim,
        output_dim=action_space.dim,
        hidden_layers=hidden_layers,
        hidden_width=hidden_width,
    )
    log_std = np.full(action_space.dim, init_log_std)
    return GaussianPolicy(spec, init_params(spec, rng), action_space, log_std)
