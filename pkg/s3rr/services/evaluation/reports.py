import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from s3rr.constants import Split
from s3rr.exceptions import MissingGroundTruthError, UndefinedCorrelationError
from s3rr.seeding import derive_seed, draw_seed
from s3rr.services.dataclasses import Trajectory
from s3rr.services.environments.base import ActionSource, BaseEnvironment
from s3rr.services.environments.rollouts import collect_rollouts, mean_gt_return
from s3rr.services.evaluation.metrics import normalize_to_range, pearson
from s3rr.services.policies.mixture import UniformPolicy
from s3rr.services.rl.reinforce import RewardFn


logger = logging.getLogger(__name__)


def discounted_return(reward: RewardFn, trajectory: Trajectory, gamma: float) -> float:
    """``Σ_t γ^t R(s_t, a_t)``, on the same scale as ``Trajectory.gt_return``."""
    rewards = np.asarray(reward(trajectory.state_array, trajectory.action_array), dtype=float)
    return float(np.sum(gamma ** np.arange(len(trajectory)) * rewards))


@dataclass(frozen=True)
class ScatterPoint:
    split: Split
    gt_return: float
    predicted_return: float
    normalized_return: float

    def to_row(self) -> dict[str, Any]:
        return {
            "split": self.split.value,
            "gt_return": self.gt_return,
            "predicted_return": self.predicted_return,
            "normalized_return": self.normalized_return,
        }


@dataclass(frozen=True)
class CorrelationReport:
    pearson_r: float
    n: int
    points: tuple[ScatterPoint, ...]
    per_split_r: Mapping[str, float | None]

    def to_dict(self) -> dict[str, Any]:
        return {"pearson_r": self.pearson_r, "n": self.n, "per_split_r": dict(self.per_split_r)}


def correlation_report(
    reward: RewardFn,
    datasets: Mapping[Split, Sequence[Trajectory]],
    env: BaseEnvironment,
) -> CorrelationReport:
    """Pearson r between predicted and ground-truth trajectory returns over all splits.

    Predicted returns are discounted with the environment's γ, like ``gt_return``.
    Normalized predictions are mapped onto the pooled ground-truth range.
    """
    splits: list[Split] = []
    gt: list[float] = []
    predicted: list[float] = []
    for split in Split:
        for index, trajectory in enumerate(datasets.get(split, ())):
            if trajectory.gt_return is None:
                raise MissingGroundTruthError(
                    f"{split.value} trajectory {index} has no ground-truth return"
                )
            splits.append(split)
            gt.append(trajectory.gt_return)
            predicted.append(discounted_return(reward, trajectory, env.spec.gamma))

    r = pearson(predicted, gt)
    normalized = normalize_to_range(predicted, min(gt), max(gt))
    points = tuple(
        ScatterPoint(split, g, p, float(n))
        for split, g, p, n in zip(splits, gt, predicted, normalized, strict=True)
    )
    per_split_r: dict[str, float | None] = {}
    for split in Split:
        members = [i for i, s in enumerate(splits) if s == split]
        if not members:
            continue
        try:
            per_split_r[split.value] = pearson(
                [predicted[i] for i in members], [gt[i] for i in members]
            )
        except UndefinedCorrelationError:
            per_split_r[split.value] = None
    logger.info("reward correlation r=%.4f over %d trajectories", r, len(points))
    return CorrelationReport(pearson_r=r, n=len(points), points=points, per_split_r=per_split_r)


@dataclass(frozen=True)
class PolicyReport:
    """Ground-truth performance of a policy against its demonstrations.

    ``percent_of_best`` is anchored at the uniform-random policy, ``100 (policy - random)
    / (best - random)``, since returns are often negative; ``raw_percent_of_best``
    is the plain ``100 policy / best``.
    """

    m: int
    demo_mean: float
    demo_best: float
    policy_mean: float
    random_mean: float
    percent_of_best: float | None
    percent_of_demo_mean: float | None
    raw_percent_of_best: float | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "m": self.m,
            "demo_mean": self.demo_mean,
            "demo_best": self.demo_best,
            "policy_mean": self.policy_mean,
            "random_mean": self.random_mean,
            "percent_of_best": self.percent_of_best,
            "percent_of_demo_mean": self.percent_of_demo_mean,
            "raw_percent_of_best": self.raw_percent_of_best,
        }


def _anchored_percent(value: float, reference: float, anchor: float) -> float | None:
    if reference == anchor:
        return None
    return 100.0 * (value - anchor) / (reference - anchor)


def policy_report(
    policy: ActionSource,
    demos: Sequence[Trajectory],
    env: BaseEnvironment,
    m: int,
    rng: np.random.Generator,
) -> PolicyReport:
    if m < 1:
        raise ValueError(f"policy report needs m >= 1 rollouts, got {m}")
    demo_returns = [t.gt_return for t in demos]
    if not demo_returns or any(r is None for r in demo_returns):
        raise MissingGroundTruthError("every demonstration needs a ground-truth return")
    seed = draw_seed(rng)
    policy_mean = mean_gt_return(collect_rollouts(env, policy, m, derive_seed(seed, "policy")))
    random_policy = UniformPolicy(env.spec.action_space)
    random_mean = mean_gt_return(collect_rollouts(env, random_policy, m, derive_seed(seed, "random")))
    demo_mean = float(np.mean(demo_returns))
    demo_best = float(np.max(demo_returns))
    report = PolicyReport(
        m=m,
        demo_mean=demo_mean,
        demo_best=demo_best,
        policy_mean=policy_mean,
        random_mean=random_mean,
        percent_of_best=_anchored_percent(policy_mean, demo_best, random_mean),
        percent_of_demo_mean=_anchored_percent(policy_mean, demo_mean, random_mean),
        raw_percent_of_best=None if demo_best == 0 else 100.0 * policy_mean / demo_best,
    )
    logger.info(
        "policy return %.4f vs best demonstration %.4f (%s%% of best)",
        policy_mean,
        demo_best,
        "n/a" if report.percent_of_best is None else f"{report.percent_of_best:.0f}",
    )
    return report
