"""Adversarial IRL with a state-action reward term.

The discriminator is ``D(s, a) = exp(f(s, a)) / (exp(f(s, a)) + π(a|s))``, evaluated
as ``expit(f - log π)``. Training alternates discriminator minibatch steps
with short policy-gradient bursts on the pseudo-reward ``f``, optionally after
warm-starting the policy by maximum likelihood on the demonstrated pairs.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, log_expit

from s3rr.exceptions import ConfigError, DivergenceError, NonFiniteGradientError
from s3rr.seeding import draw_seed
from s3rr.services.approximators.optimizers import OptimizerState, optimizer_step
from s3rr.services.dataclasses import Trajectory
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.rollouts import collect_rollouts
from s3rr.services.policies.stochastic_policy import StochasticPolicy, build_policy
from s3rr.services.reward_models import ApproximatorReward, build_reward_model
from s3rr.services.rl.reinforce import RLConfig, train_policy


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AirlConfig:
    demo_subset_size: int | None = None
    disc_hidden_layers: int = 1
    disc_hidden_width: int = 8
    policy_hidden_layers: int = 1
    policy_hidden_width: int = 8
    sparsity_lambda: float = 0.0
    outer_iterations: int = 40
    disc_steps_per_iter: int = 5
    disc_batch_size: int = 64
    disc_step_size: float = 1e-2
    policy_iterations_per_iter: int = 5
    policy_rollouts_per_iter: int = 16
    policy_step_size: float = 1e-2
    init_log_std: float = -0.5
    bc_epochs: int = 0
    bc_step_size: float = 1e-2
    log_every: int = 10

    def __post_init__(self) -> None:
        if self.demo_subset_size is not None and self.demo_subset_size < 1:
            raise ValueError(f"demo_subset_size must be >= 1, got {self.demo_subset_size}")
        if self.sparsity_lambda < 0:
            raise ValueError(f"sparsity_lambda must be >= 0, got {self.sparsity_lambda}")
        if min(self.outer_iterations, self.disc_steps_per_iter, self.disc_batch_size) < 1:
            raise ValueError("outer_iterations, disc_steps_per_iter and disc_batch_size must be >= 1")
        if self.bc_epochs < 0:
            raise ValueError(f"bc_epochs must be >= 0, got {self.bc_epochs}")

    def with_capacity(self, hidden_layers: int) -> "AirlConfig":
        """Capacity knob: the layer count of both the discriminator and the policy."""
        return replace(self, disc_hidden_layers=hidden_layers, policy_hidden_layers=hidden_layers)

    def burst_config(self) -> RLConfig:
        return RLConfig(
            iterations=self.policy_iterations_per_iter,
            rollouts_per_iter=self.policy_rollouts_per_iter,
            step_size=self.policy_step_size,
            sparsity_lambda=self.sparsity_lambda,
            hidden_layers=self.policy_hidden_layers,
            hidden_width=self.policy_hidden_width,
            init_log_std=self.init_log_std,
            log_every=0,
        )


@dataclass(frozen=True)
class AirlLogRow:
    iteration: int
    bce: float
    accuracy: float
    policy_gt_return: float


@dataclass
class AirlResult:
    reward_model: ApproximatorReward
    policy: StochasticPolicy
    demos_used: int
    log: list[AirlLogRow] = field(default_factory=list)


@dataclass(frozen=True)
class PairBatch:
    """(s, a) pairs pooled from a set of trajectories."""

    states: np.ndarray
    actions: np.ndarray

    @classmethod
    def from_trajectories(cls, trajectories: Sequence[Trajectory]) -> "PairBatch":
        if not trajectories:
            raise ValueError("cannot build a pair batch from no trajectories")
        return cls(
            states=np.vstack([t.state_array for t in trajectories]),
            actions=np.vstack([t.action_array for t in trajectories]),
        )

    def __len__(self) -> int:
        return self.states.shape[0]

    def sample(self, size: int, rng: np.random.Generator) -> "PairBatch":
        if size >= len(self):
            return self
        index = np.sort(rng.choice(len(self), size=size, replace=False))
        return PairBatch(self.states[index], self.actions[index])


def discriminator_value(f_value: float | np.ndarray, log_pi: float | np.ndarray) -> np.ndarray:
    return expit(np.asarray(f_value, dtype=float) - np.asarray(log_pi, dtype=float))


def _logits(batch: PairBatch, reward_model: ApproximatorReward, policy: StochasticPolicy) -> np.ndarray:
    return reward_model(batch.states, batch.actions) - policy.log_densities(batch.states, batch.actions)


def discriminator_loss(
    demo_batch: PairBatch,
    policy_batch: PairBatch,
    reward_model: ApproximatorReward,
    policy: StochasticPolicy,
) -> tuple[float, np.ndarray]:
    """Binary cross entropy (demos labelled 1) and its exact gradient over θ."""
    if len(demo_batch) == 0 or len(policy_batch) == 0:
        raise ValueError("discriminator loss needs non-empty demo and policy batches")
    demo_logits = _logits(demo_batch, reward_model, policy)
    policy_logits = _logits(policy_batch, reward_model, policy)
    bce = -float(np.mean(log_expit(demo_logits))) - float(np.mean(log_expit(-policy_logits)))
    demo_upstream = (expit(demo_logits) - 1.0) / len(demo_batch)
    policy_upstream = expit(policy_logits) / len(policy_batch)
    grad = reward_model.gradient(demo_batch.states, demo_batch.actions, demo_upstream)
    grad = grad + reward_model.gradient(policy_batch.states, policy_batch.actions, policy_upstream)
    return bce, grad


def discriminator_accuracy(
    positive: PairBatch,
    negative: PairBatch,
    reward_model: ApproximatorReward,
    policy: StochasticPolicy,
) -> float:
    """Fraction of pairs on the correct side of D = 0.5, positives being demonstrations."""
    hits = np.sum(_logits(positive, reward_model, policy) > 0) + np.sum(
        _logits(negative, reward_model, policy) < 0
    )
    return float(hits) / (len(positive) + len(negative))


def heldout_accuracy(
    demos: Sequence[Trajectory], negatives: Sequence[Trajectory], reward_model: ApproximatorReward
) -> float:
    """Accuracy of D on fresh demonstrations against uniform-random rollouts.

    The negatives' generator is the uniform policy, so ``log U(a)`` takes the
    place of ``log π(a|s)`` and pairs are classified by ``f(s, a) > log U(a)``.
    """
    positive = PairBatch.from_trajectories(demos)
    negative = PairBatch.from_trajectories(negatives)
    log_uniform = reward_model.action_space.uniform_log_density
    hits = np.sum(reward_model(positive.states, positive.actions) > log_uniform) + np.sum(
        reward_model(negative.states, negative.actions) < log_uniform
    )
    return float(hits) / (len(positive) + len(negative))


def clone_demonstrations(
    policy: StochasticPolicy, demo_pairs: PairBatch, epochs: int, step_size: float
) -> StochasticPolicy:
    """Full-batch Adam ascent on the mean log-likelihood of the demonstrated actions."""
    optimizer = OptimizerState.for_size(policy.flat_params.size, step_size)
    weights = np.full(len(demo_pairs), 1.0 / len(demo_pairs))
    for epoch in range(epochs):
        grad = policy.grad_log_density(demo_pairs.states, demo_pairs.actions, weights)
        try:
            values, optimizer = optimizer_step(optimizer, policy.flat_params, -grad)
        except NonFiniteGradientError as e:
            raise DivergenceError("airl warm start", epoch) from e
        if not np.all(np.isfinite(values)):
            raise DivergenceError("airl warm start", epoch)
        policy = policy.with_flat_params(values)
    if epochs:
        log_likelihood = float(np.mean(policy.log_densities(demo_pairs.states, demo_pairs.actions)))
        logger.info("warm start after %d epochs: demo log-likelihood %.4f", epochs, log_likelihood)
    return policy


def select_demonstrations(
    demos: Sequence[Trajectory], subset_size: int | None, rng: np.random.Generator
) -> list[Trajectory]:
    """First ``subset_size`` demonstrations after a seeded shuffle."""
    if not demos:
        raise ConfigError("AIRL needs at least one demonstration", "env.n_demos")
    if subset_size is None:
        return list(demos)
    if subset_size > len(demos):
        raise ConfigError(
            f"demo subset of {subset_size} exceeds the {len(demos)} available demonstrations",
            "airl.demo_subset_size",
        )
    order = rng.permutation(len(demos))
    return [demos[i] for i in order[:subset_size]]


def train_airl(
    env: BaseEnvironment,
    demos: Sequence[Trajectory],
    config: AirlConfig,
    rng: np.random.Generator,
) -> AirlResult:
    demos = select_demonstrations(demos, config.demo_subset_size, rng)
    demo_pairs = PairBatch.from_trajectories(demos)
    reward_model = build_reward_model(
        env.spec.state_space,
        env.spec.action_space,
        config.disc_hidden_layers,
        config.disc_hidden_width,
        rng,
    )
    policy = build_policy(
        env.spec.state_space,
        env.spec.action_space,
        config.policy_hidden_layers,
        config.policy_hidden_width,
        rng,
        init_log_std=config.init_log_std,
    )
    policy = clone_demonstrations(policy, demo_pairs, config.bc_epochs, config.bc_step_size)
    burst = config.burst_config()
    disc_optimizer = OptimizerState.for_size(reward_model.params.values.size, config.disc_step_size)
    result = AirlResult(reward_model=reward_model, policy=policy, demos_used=len(demos))

    logger.info(
        "AIRL on %s: %d demonstrations, disc layers %d, policy layers %d, lambda %g, warm start %d",
        env.id,
        len(demos),
        config.disc_hidden_layers,
        config.policy_hidden_layers,
        config.sparsity_lambda,
        config.bc_epochs,
    )
    for iteration in range(config.outer_iterations):
        rollouts = collect_rollouts(env, policy, config.policy_rollouts_per_iter, draw_seed(rng))
        policy_pairs = PairBatch.from_trajectories(rollouts)
        for _ in range(config.disc_steps_per_iter):
            demo_minibatch = demo_pairs.sample(config.disc_batch_size, rng)
            policy_minibatch = policy_pairs.sample(config.disc_batch_size, rng)
            _, grad = discriminator_loss(demo_minibatch, policy_minibatch, reward_model, policy)
            try:
                values, disc_optimizer = optimizer_step(disc_optimizer, reward_model.params.values, grad)
            except NonFiniteGradientError as e:
                raise DivergenceError("airl", iteration) from e
            if not np.all(np.isfinite(values)):
                raise DivergenceError("airl", iteration)
            reward_model = reward_model.with_values(values)

        bce, _ = discriminator_loss(demo_pairs, policy_pairs, reward_model, policy)
        accuracy = discriminator_accuracy(demo_pairs, policy_pairs, reward_model, policy)
        try:
            policy = train_policy(env, reward_model, burst, rng, policy=policy, stage="airl").policy
        except DivergenceError as e:
            raise DivergenceError("airl", iteration) from e

        row = AirlLogRow(
            iteration=iteration,
            bce=bce,
            accuracy=accuracy,
            policy_gt_return=float(np.mean([t.gt_return for t in rollouts])),
        )
        result.log.append(row)
        if config.log_every and iteration % config.log_every == 0:
            logger.info(
                "airl iteration %d: bce %.4f, accuracy %.3f, policy return %.4f",
                iteration,
                row.bce,
                row.accuracy,
                row.policy_gt_return,
            )

    result.reward_model = reward_model
    result.policy = policy
    return result
