import logging
from collections.abc import Sequence

import numpy as np

from s3rr.constants import DegradationMethod
from s3rr.exceptions import ConfigError
from s3rr.seeding import derive_seed, draw_seed
from s3rr.services.airl.adversarial import AirlResult
from s3rr.services.dataclasses import DegradationDataset, Trajectory
from s3rr.services.degradation_backends.base import (
    BaseDegradationBackend,
    DegradationPlan,
    DegradationRun,
)
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.rollouts import collect_rollouts, mean_gt_return
from s3rr.services.policies.mixture import MixturePolicy
from s3rr.services.reward_models import score_trajectory


logger = logging.getLogger(__name__)


def generate_noise_dataset(
    env: BaseEnvironment,
    airl_result: AirlResult,
    etas: Sequence[float],
    per_level: int,
    rng: np.random.Generator,
) -> DegradationDataset:
    """Rollouts of ``η U(a) + (1 - η) π_AIRL`` per level, scored by the AIRL reward."""
    plan = DegradationPlan(DegradationMethod.NOISE, tuple(float(eta) for eta in etas), per_level)
    return NoiseInjectionBackend(plan).generate(env, (), airl_result, rng)


class NoiseInjectionBackend(BaseDegradationBackend):
    def generate(
        self,
        env: BaseEnvironment,
        demos: Sequence[Trajectory],
        airl_result: AirlResult | None,
        rng: np.random.Generator,
    ) -> DegradationDataset:
        if airl_result is None:
            raise ConfigError("noise injection needs a trained AIRL policy", "degradation.method")
        seed = draw_seed(rng)
        scoring_model = airl_result.reward_model
        trajectories: list[Trajectory] = []
        runs: list[DegradationRun] = []
        for index, eta in enumerate(sorted(self.plan.etas)):
            level = collect_rollouts(
                env,
                MixturePolicy(airl_result.policy, eta),
                self.plan.trajectories_per_level,
                derive_seed(seed, "level", index),
                eta=eta,
            )
            trajectories.extend(score_trajectory(scoring_model, t) for t in level)
            runs.append(
                DegradationRun(
                    control=eta,
                    eta=eta,
                    l1_norm=airl_result.policy.l1_norm(),
                    mean_gt_return=mean_gt_return(level),
                )
            )
            logger.debug("noise level %.4f: mean ground-truth return %.4f", eta, runs[-1].mean_gt_return)
        return self._assemble(env, trajectories, runs, scoring_model.digest(), seed)
