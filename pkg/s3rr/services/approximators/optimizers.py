from dataclasses import dataclass, replace

import numpy as np

from s3rr.exceptions import DimensionMismatchError, NonFiniteGradientError


DEFAULT_STEP_SIZE = 1e-3


@dataclass(frozen=True)
class OptimizerState:
    """Adam moments for one parameter vector. Immutable; every step returns a new state."""

    step_size: float
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self) -> None:
        if not self.step_size > 0:
            raise ValueError(f"step_size must be positive, got {self.step_size}")

    @classmethod
    def for_size(cls, size: int, step_size: float = DEFAULT_STEP_SIZE) -> "OptimizerState":
        return cls(step_size=step_size, first_moment=np.zeros(size), second_moment=np.zeros(size))

    def with_step_size(self, step_size: float) -> "OptimizerState":
        return replace(self, step_size=step_size)


def optimizer_step(
    state: OptimizerState, params: np.ndarray, gradient: np.ndarray
) -> tuple[np.ndarray, OptimizerState]:
    """One bias-corrected Adam step against ``gradient`` (minimization)."""
    params = np.asarray(params, dtype=float)
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != params.shape or state.first_moment.shape != params.shape:
        raise DimensionMismatchError(
            f"gradient {gradient.shape} / state {state.first_moment.shape} "
            f"do not match parameters {params.shape}"
        )
    if not np.all(np.isfinite(gradient)):
        raise NonFiniteGradientError("optimizer step rejected: non-finite gradient")

    step = state.step + 1
    first = state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient
    second = state.beta2 * state.second_moment + (1.0 - state.beta2) * gradient**2
    first_hat = first / (1.0 - state.beta1**step)
    second_hat = second / (1.0 - state.beta2**step)
    updated = params - state.step_size * first_hat / (np.sqrt(second_hat) + state.epsilon)
    return updated, replace(state, first_moment=first, second_moment=second, step=step)
