"""Maximum-entropy REINFORCE with a baseline.

The optimised objective is ``E[sum_t γ^t (R(s_t, a_t) + α H(π(·|s_t)))] - λ ||φ||_1``.
The entropy enters analytically: per-step entropies are added to the
reward-to-go, and their direct dependence on φ is differentiated exactly.
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

import numpy as np

from s3rr.constants import BaselineKind
from s3rr.exceptions import DivergenceError, NonFiniteGradientError, RolloutError
from s3rr.model_factory import ApproximatorSpec, init_params
from s3rr.seeding import draw_seed
from s3rr.services.approximators.mlp import forward, gradient
from s3rr.services.approximators.optimizers import OptimizerState, optimizer_step
from s3rr.services.dataclasses import Trajectory
from s3rr.services.environments.rollouts import collect_rollouts
from s3rr.services.policies.stochastic_policy import StochasticPolicy, build_policy


if TYPE_CHECKING:
    from s3rr.services.environments.base import BaseEnvironment


logger = logging.getLogger(__name__)


class RewardFn(Protocol):
    """Batch reward hook: ground truth, AIRL's f_θ and the regressed R_θ all fit it."""

    def __call__(self, states: np.ndarray, actions: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class RLConfig:
    iterations: int = 200
    rollouts_per_iter: int = 16
    alpha: float | None = None
    gamma: float | None = None
    baseline: BaselineKind = BaselineKind.MEAN_RETURN
    step_size: float = 1e-2
    value_step_size: float = 1e-2
    value_epochs: int = 20
    sparsity_lambda: float = 0.0
    hidden_layers: int = 1
    hidden_width: int = 8
    init_log_std: float = -0.5
    log_every: int = 25
    # pipeline only: start from the AIRL policy, whose architecture then wins over
    # hidden_layers/hidden_width
    warm_start: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1 or self.rollouts_per_iter < 1:
            raise ValueError("iterations and rollouts_per_iter must be >= 1")
        if self.alpha is not None and self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.sparsity_lambda < 0:
            raise ValueError(f"sparsity_lambda must be >= 0, got {self.sparsity_lambda}")
        if self.gamma is not None and not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


@dataclass(frozen=True)
class LearningCurveRow:
    iteration: int
    mean_return: float
    entropy: float
    l1_norm: float


@dataclass
class TrainResult:
    policy: StochasticPolicy
    curve: list[LearningCurveRow] = field(default_factory=list)


class ValueBaseline:
    """V(s, t/T) fitted by regression on observed reward-to-go."""

    def __init__(self, state_dim: int, horizon: int, config: RLConfig, rng: np.random.Generator):
        self.spec = ApproximatorSpec(input_dim=state_dim + 1, output_dim=1, hidden_width=16)
        self.params = init_params(self.spec, rng)
        self.horizon = horizon
        self.config = config
        self.optimizer = OptimizerState.for_size(self.spec.parameter_count(), config.value_step_size)

    def _inputs(self, states: np.ndarray, times: np.ndarray) -> np.ndarray:
        return np.hstack([states, (times / self.horizon)[:, None]])

    def predict(self, states: np.ndarray, times: np.ndarray) -> np.ndarray:
        return forward(self.spec, self.params, self._inputs(states, times))[:, 0]

    def fit(self, states: np.ndarray, times: np.ndarray, targets: np.ndarray) -> None:
        inputs = self._inputs(states, times)
        for _ in range(self.config.value_epochs):
            residual = forward(self.spec, self.params, inputs)[:, 0] - targets
            grad = gradient(self.spec, self.params, inputs, (2.0 * residual / residual.size)[:, None])
            values, self.optimizer = optimizer_step(self.optimizer, self.params.values, grad)
            self.params = self.params.with_values(values)


@dataclass(frozen=True)
class _Batch:
    states: np.ndarray
    actions: np.ndarray
    times: np.ndarray
    discounts: np.ndarray
    to_go: np.ndarray  # Σ_{t'≥t} γ^{t'} (r + αH), absolute discounting
    returns: np.ndarray  # per trajectory, under the supplied reward
    entropies: np.ndarray
    lengths: np.ndarray


def _assemble(
    trajectories: list[Trajectory],
    policy: StochasticPolicy,
    reward: RewardFn,
    gamma: float,
    alpha: float,
) -> _Batch:
    states, actions, times, discounts, to_go, returns, entropies = [], [], [], [], [], [], []
    for trajectory in trajectories:
        s, a = trajectory.state_array, trajectory.action_array
        steps = np.arange(len(trajectory))
        discount = gamma**steps
        r = np.asarray(reward(s, a), dtype=float)
        h = policy.entropies(s)
        augmented = discount * (r + alpha * h)
        states.append(s)
        actions.append(a)
        times.append(steps.astype(float))
        discounts.append(discount)
        to_go.append(np.cumsum(augmented[::-1])[::-1])
        returns.append(float(np.sum(discount * r)))
        entropies.append(h)
    return _Batch(
        states=np.vstack(states),
        actions=np.vstack(actions),
        times=np.concatenate(times),
        discounts=np.concatenate(discounts),
        to_go=np.concatenate(to_go),
        returns=np.array(returns),
        entropies=np.concatenate(entropies),
        lengths=np.array([len(t) for t in trajectories]),
    )


def _leave_one_out_baseline(batch: _Batch) -> np.ndarray:
    """Per-time mean of the other trajectories' reward-to-go (0 past their end)."""
    n = batch.lengths.size
    if n == 1:
        return np.zeros_like(batch.to_go)
    horizon = int(batch.lengths.max())
    padded = np.zeros((n, horizon))
    offsets = np.concatenate([[0], np.cumsum(batch.lengths)])
    for i in range(n):
        padded[i, : batch.lengths[i]] = batch.to_go[offsets[i] : offsets[i + 1]]
    leave_one_out = (padded.sum(axis=0, keepdims=True) - padded) / (n - 1)
    return np.concatenate([leave_one_out[i, : batch.lengths[i]] for i in range(n)])


def policy_gradient_estimate(
    trajectories: list[Trajectory],
    policy: StochasticPolicy,
    reward: RewardFn,
    config: RLConfig,
    gamma: float,
    alpha: float,
    value_baseline: ValueBaseline | None = None,
) -> np.ndarray:
    """Ascent direction for the entropy-regularised return minus ``λ ||φ||_1``."""
    if not trajectories:
        raise RolloutError("policy gradient estimate needs at least one trajectory")
    batch = _assemble(trajectories, policy, reward, gamma, alpha)
    return _estimate(batch, policy, config, alpha, value_baseline)


def _estimate(
    batch: _Batch,
    policy: StochasticPolicy,
    config: RLConfig,
    alpha: float,
    value_baseline: ValueBaseline | None,
) -> np.ndarray:
    if value_baseline is not None:
        baseline = batch.discounts * value_baseline.predict(batch.states, batch.times)
    else:
        baseline = _leave_one_out_baseline(batch)
    n = batch.lengths.size
    grad = policy.grad_log_density(batch.states, batch.actions, batch.to_go - baseline)
    if alpha > 0:
        grad = grad + alpha * policy.grad_entropy(batch.states, batch.discounts)
    grad = grad / n
    if config.sparsity_lambda > 0:
        grad = grad - config.sparsity_lambda * policy.l1_subgradient()
    return grad


def train_policy(
    env: "BaseEnvironment",
    reward: RewardFn,
    config: RLConfig,
    rng: np.random.Generator,
    policy: StochasticPolicy | None = None,
    stage: str = "rl",
) -> TrainResult:
    gamma = env.spec.gamma if config.gamma is None else config.gamma
    alpha = env.spec.alpha if config.alpha is None else config.alpha
    if policy is None:
        policy = build_policy(
            env.spec.state_space,
            env.spec.action_space,
            config.hidden_layers,
            config.hidden_width,
            rng,
            init_log_std=config.init_log_std,
        )
    value_baseline = None
    if config.baseline == BaselineKind.LEARNED_VALUE:
        value_baseline = ValueBaseline(env.spec.state_space.dim, env.spec.horizon, config, rng)

    optimizer = OptimizerState.for_size(policy.flat_params.size, config.step_size)
    result = TrainResult(policy=policy)
    for iteration in range(config.iterations):
        trajectories = collect_rollouts(env, policy, config.rollouts_per_iter, draw_seed(rng))
        batch = _assemble(trajectories, policy, reward, gamma, alpha)
        try:
            grad = _estimate(batch, policy, config, alpha, value_baseline)
            values, optimizer = optimizer_step(optimizer, policy.flat_params, -grad)
        except NonFiniteGradientError as e:
            raise DivergenceError(stage, iteration) from e
        if not np.all(np.isfinite(values)):
            raise DivergenceError(stage, iteration)
        if value_baseline is not None:
            relative_to_go = batch.to_go / np.where(batch.discounts > 0, batch.discounts, 1.0)
            value_baseline.fit(batch.states, batch.times, relative_to_go)

        row = LearningCurveRow(
            iteration=iteration,
            mean_return=float(batch.returns.mean()),
            entropy=float(batch.entropies.mean()),
            l1_norm=policy.l1_norm(),
        )
        result.curve.append(row)
        if config.log_every and iteration % config.log_every == 0:
            logger.info(
                "%s iteration %d: mean return %.4f, entropy %.4f, l1 %.4f",
                stage,
                iteration,
                row.mean_return,
                row.entropy,
                row.l1_norm,
            )
        policy = policy.with_flat_params(values)

    result.policy = policy
    return result
