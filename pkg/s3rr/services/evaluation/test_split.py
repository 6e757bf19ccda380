import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from s3rr.constants import Provenance
from s3rr.seeding import derive_seed, draw_seed, make_rng
from s3rr.services.dataclasses import DegradationDataset, Trajectory
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.rollouts import collect_rollouts
from s3rr.services.policies.mixture import MixturePolicy
from s3rr.services.policies.stochastic_policy import StochasticPolicy
from s3rr.services.reward_models import GroundTruthReward
from s3rr.services.rl.reinforce import RLConfig, train_policy


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TestSplitConfig:
    __test__ = False  # not a pytest class

    per_level: int = 5
    snapshots: int = 3
    snapshot_iterations: int = 10

    def __post_init__(self) -> None:
        if self.per_level < 1:
            raise ValueError(f"per_level must be >= 1, got {self.per_level}")
        if self.snapshots < 0 or self.snapshot_iterations < 1:
            raise ValueError("snapshots must be >= 0 and snapshot_iterations >= 1")


def off_grid_etas(training_etas: Sequence[float]) -> list[float]:
    """Midpoints between consecutive training levels."""
    grid = sorted(set(training_etas))
    return [(a + b) / 2.0 for a, b in zip(grid, grid[1:], strict=False)]


def generate_test_split(
    env: BaseEnvironment,
    policy: StochasticPolicy,
    training_etas: Sequence[float],
    config: TestSplitConfig,
    rng: np.random.Generator,
    rl_config: RLConfig | None = None,
) -> DegradationDataset:
    """Trajectories from generators unseen in training.

    Two sources: η-mixtures of ``policy`` at the midpoints of the training
    grid, and snapshots of a fresh policy trained on the ground-truth reward.
    Snapshot ``i`` of ``n`` is labelled ``η = 1 - (i + 1) / (n + 1)``.
    """
    seed = draw_seed(rng)
    trajectories: list[Trajectory] = []
    for index, eta in enumerate(off_grid_etas(training_etas)):
        trajectories.extend(
            collect_rollouts(
                env,
                MixturePolicy(policy, eta),
                config.per_level,
                derive_seed(seed, "mixture", index),
                eta=eta,
            )
        )

    rl_config = replace(
        rl_config or RLConfig(), iterations=config.snapshot_iterations, log_every=0
    )
    snapshot_rng = make_rng(derive_seed(seed, "snapshots"))
    snapshot: StochasticPolicy | None = None
    ground_truth = GroundTruthReward(env)
    for index in range(config.snapshots):
        snapshot = train_policy(
            env, ground_truth, rl_config, snapshot_rng, policy=snapshot, stage="test-split"
        ).policy
        eta = 1.0 - (index + 1) / (config.snapshots + 1)
        trajectories.extend(
            collect_rollouts(
                env, snapshot, config.per_level, derive_seed(seed, "snapshot", index), eta=eta
            )
        )

    logger.info("test split: %d unseen trajectories", len(trajectories))
    return DegradationDataset.from_trajectories(
        env.id, trajectories, Provenance.TEST, seed=seed, metadata={"source": "test"}
    )
