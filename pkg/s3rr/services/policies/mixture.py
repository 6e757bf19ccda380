import numpy as np

from s3rr.exceptions import SpaceError
from s3rr.services.dataclasses import SpaceSpec
from s3rr.services.policies.stochastic_policy import CategoricalPolicy, StochasticPolicy


class UniformPolicy:
    """U(a): uniform over the cells of a discrete space or the box of a continuous one."""

    def __init__(self, action_space: SpaceSpec) -> None:
        self.action_space = action_space

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.action_space.sample_uniform(rng)


class MixturePolicy:
    """π_η = η U(a) + (1 - η) π(a|s).

    At η = 0 and η = 1 no coin is flipped, so rollouts reproduce the base and the
    uniform policy draw for draw under the same random stream.
    """

    def __init__(self, base: StochasticPolicy, eta: float) -> None:
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {eta}")
        self.base = base
        self.eta = eta
        self.uniform = UniformPolicy(base.action_space)

    def draw(self, state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.eta == 0.0:
            return self.base.draw(state, rng)
        if self.eta == 1.0:
            return self.uniform.draw(state, rng)
        if rng.random() < self.eta:
            return self.uniform.draw(state, rng)
        return self.base.draw(state, rng)


def mixture_sample(
    policy: StochasticPolicy, eta: float, state: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    return policy.action_space.clip(MixturePolicy(policy, eta).draw(state, rng))


def mixture_probabilities(policy: StochasticPolicy, eta: float, state: np.ndarray) -> np.ndarray:
    if not isinstance(policy, CategoricalPolicy):
        raise SpaceError("mixture probabilities are only enumerable for discrete policies")
    cardinality = policy.action_space.cardinality
    return eta / cardinality + (1.0 - eta) * policy.probabilities(state)
