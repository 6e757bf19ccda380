"""Idealized reward regression: fit R_θ so each trajectory's return matches σ(η)."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from s3rr.exceptions import DatasetValidationError, DivergenceError, NonFiniteGradientError
from s3rr.services.approximators.optimizers import OptimizerState, optimizer_step
from s3rr.services.dataclasses import DegradationDataset, SigmoidParams, Trajectory
from s3rr.services.environments import make_env
from s3rr.services.reward_models import ApproximatorReward, build_reward_model
from s3rr.services.reward_regression.sigmoid_fit import sigmoid_eval


logger = logging.getLogger(__name__)

LOSS_INCREASE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class RewardRegressionConfig:
    epochs: int = 200
    batch_size: int = 32
    step_size: float = 1e-2
    hidden_layers: int = 1
    hidden_width: int = 16
    normalize_targets: bool = False
    log_every: int = 50

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.step_size <= 0:
            raise ValueError(f"step_size must be > 0, got {self.step_size}")


@dataclass(frozen=True)
class LossRow:
    epoch: int
    loss: float
    step_size: float


@dataclass
class RegressionResult:
    """``reward_model`` predicts returns on the sigmoid scale; any target
    standardization has already been folded into its output layer.
    """

    reward_model: ApproximatorReward
    loss_curve: list[LossRow] = field(default_factory=list)
    step_offset: float = 0.0
    target_scale: float = 1.0


class _Stacked:
    """All (s, a) pairs of a trajectory list, with segment offsets for per-trajectory sums."""

    def __init__(self, trajectories: Sequence[Trajectory]) -> None:
        if not trajectories:
            raise DatasetValidationError("cannot regress rewards on an empty dataset")
        lengths = np.array([len(t) for t in trajectories])
        if np.any(lengths == 0):
            raise DatasetValidationError("trajectories must have at least one step")
        self.states = np.vstack([t.state_array for t in trajectories])
        self.actions = np.vstack([t.action_array for t in trajectories])
        self.lengths = lengths
        self.offsets = np.concatenate([[0], np.cumsum(lengths)[:-1]])

    def subset(self, indices: np.ndarray) -> "_Stacked":
        stacked = object.__new__(_Stacked)
        rows = np.concatenate(
            [np.arange(o, o + n) for o, n in zip(self.offsets[indices], self.lengths[indices], strict=True)]
        )
        stacked.states = self.states[rows]
        stacked.actions = self.actions[rows]
        stacked.lengths = self.lengths[indices]
        stacked.offsets = np.concatenate([[0], np.cumsum(stacked.lengths)[:-1]])
        return stacked

    def returns(self, reward_model: ApproximatorReward) -> np.ndarray:
        return np.add.reduceat(reward_model(self.states, self.actions), self.offsets)


def predicted_returns(reward_model: ApproximatorReward, trajectories: Sequence[Trajectory]) -> np.ndarray:
    """Undiscounted ``Σ_t R_θ(s_t, a_t)`` per trajectory."""
    return _Stacked(trajectories).returns(reward_model)


def _loss_and_gradient(
    reward_model: ApproximatorReward, stacked: _Stacked, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    errors = stacked.returns(reward_model) - targets
    upstream = np.repeat(2.0 * errors / errors.size, stacked.lengths)
    grad = reward_model.gradient(stacked.states, stacked.actions, upstream)
    return float(np.mean(errors**2)), grad


def ssrr_targets(trajectories: Sequence[Trajectory], sigmoid: SigmoidParams) -> np.ndarray:
    return np.asarray(sigmoid_eval(sigmoid, np.array([t.eta for t in trajectories])), dtype=float)


def ssrr_loss_and_gradient(
    reward_model: ApproximatorReward,
    trajectories: Sequence[Trajectory],
    targets: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean squared return error and its gradient over θ: ``2 e_i Σ_t ∇R_θ / N``."""
    return _loss_and_gradient(reward_model, _Stacked(trajectories), np.asarray(targets, dtype=float))


def ssrr_loss(
    reward_model: ApproximatorReward,
    dataset: DegradationDataset | Sequence[Trajectory],
    sigmoid: SigmoidParams,
) -> float:
    trajectories = dataset.trajectories if isinstance(dataset, DegradationDataset) else dataset
    errors = predicted_returns(reward_model, trajectories) - ssrr_targets(trajectories, sigmoid)
    return float(np.mean(errors**2))


def reward_regression(
    dataset: DegradationDataset,
    sigmoid: SigmoidParams,
    config: RewardRegressionConfig,
    rng: np.random.Generator,
    reward_model: ApproximatorReward | None = None,
) -> RegressionResult:
    """Minibatch Adam on the squared return error, one full-data line search per epoch.

    An epoch that raises the full-data loss by more than ``LOSS_INCREASE_TOLERANCE``
    is undone and the step size halved, so the recorded curve never increases.
    Without an explicit ``reward_model`` a fresh network is built for the spaces
    of the dataset's registered environment.

    With ``normalize_targets`` the network trains on ``(y_i - μ L_i) / s``, where
    ``μ`` is the per-step mean target and ``L_i`` the trajectory length, and the
    returned model is rescaled to ``s R + μ`` so its sums reproduce ``y_i``.
    Loss rows are reported on the original scale.
    """
    trajectories = dataset.trajectories
    stacked = _Stacked(trajectories)
    targets = ssrr_targets(trajectories, sigmoid)
    step_offset, target_scale = 0.0, 1.0
    if config.normalize_targets:
        step_offset = float(np.sum(targets) / np.sum(stacked.lengths))
        centered = targets - step_offset * stacked.lengths
        target_scale = float(np.std(centered)) or 1.0
        targets = centered / target_scale
    loss_scale = target_scale**2

    if reward_model is None:
        spec = make_env(dataset.env_id).spec
        reward_model = build_reward_model(
            spec.state_space, spec.action_space, config.hidden_layers, config.hidden_width, rng
        )
    optimizer = OptimizerState.for_size(reward_model.params.values.size, config.step_size)
    loss, _ = _loss_and_gradient(reward_model, stacked, targets)
    curve: list[LossRow] = []
    n = len(trajectories)

    for epoch in range(config.epochs):
        candidate, candidate_optimizer = reward_model, optimizer
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            indices = order[start : start + config.batch_size]
            _, grad = _loss_and_gradient(candidate, stacked.subset(indices), targets[indices])
            try:
                values, candidate_optimizer = optimizer_step(
                    candidate_optimizer, candidate.params.values, grad
                )
            except NonFiniteGradientError as e:
                raise DivergenceError("reward", epoch) from e
            if not np.all(np.isfinite(values)):
                raise DivergenceError("reward", epoch)
            candidate = candidate.with_values(values)

        candidate_loss, _ = _loss_and_gradient(candidate, stacked, targets)
        if not np.isfinite(candidate_loss):
            raise DivergenceError("reward", epoch)
        if candidate_loss > loss + LOSS_INCREASE_TOLERANCE:
            optimizer = optimizer.with_step_size(optimizer.step_size / 2.0)
            logger.debug("reward epoch %d raised the loss; step size now %g", epoch, optimizer.step_size)
        else:
            reward_model, optimizer, loss = candidate, candidate_optimizer, candidate_loss
        curve.append(LossRow(epoch=epoch, loss=loss * loss_scale, step_size=optimizer.step_size))
        if config.log_every and epoch % config.log_every == 0:
            logger.info(
                "reward epoch %d: loss %.6g, step size %g", epoch, loss * loss_scale, optimizer.step_size
            )

    if config.normalize_targets:
        reward_model = reward_model.with_output_affine(target_scale, step_offset)
    return RegressionResult(reward_model, curve, step_offset, target_scale)
