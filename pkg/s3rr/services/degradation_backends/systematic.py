"""Systematic degradation: several AIRL runs, each weakened along one knob.

The knob is the demonstration count, the hidden-layer count of both networks,
or the policy's L1 coefficient. Every other AIRL setting is shared across runs.
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from s3rr.app_settings import S3RRSettings
from s3rr.constants import DegradationMethod
from s3rr.exceptions import AirlRunError, ConfigError, S3RRError
from s3rr.seeding import derive_seed, draw_seed, make_rng
from s3rr.services.airl.adversarial import AirlConfig, AirlResult, train_airl
from s3rr.services.dataclasses import DegradationDataset, Trajectory
from s3rr.services.degradation_backends.base import (
    BaseDegradationBackend,
    DegradationPlan,
    DegradationRun,
)
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.rollouts import collect_rollouts, mean_gt_return
from s3rr.services.reward_models import score_trajectory


logger = logging.getLogger(__name__)


def apply_control(config: AirlConfig, method: DegradationMethod, control: float) -> AirlConfig:
    """``config`` with exactly one knob set to ``control``."""
    if method == DegradationMethod.DEMO_COUNT:
        return replace(config, demo_subset_size=int(control))
    if method == DegradationMethod.CAPACITY:
        return config.with_capacity(int(control))
    if method == DegradationMethod.SPARSITY:
        return replace(config, sparsity_lambda=float(control))
    raise ConfigError(f"{method.value} is not a systematic degradation method", "degradation.method")


@dataclass
class TrainedLevel:
    control: float
    eta: float
    config: AirlConfig
    result: AirlResult


def train_degradation_runs(
    env: BaseEnvironment,
    demos: Sequence[Trajectory],
    plan: DegradationPlan,
    airl_config: AirlConfig,
    seed: int,
    workers: int | None = None,
) -> list[TrainedLevel]:
    """One AIRL run per control, run ``i`` seeded by ``derive_seed(seed, "airl-run", i)``.

    Runs are independent, so they may execute concurrently; the returned list
    follows the order of ``plan.controls``.
    """
    etas = plan.etas

    def run(index: int) -> TrainedLevel:
        control = plan.controls[index]
        config = apply_control(airl_config, plan.method, control)
        try:
            result = train_airl(env, demos, config, make_rng(derive_seed(seed, "airl-run", index)))
        except ConfigError:
            raise
        except S3RRError as e:
            raise AirlRunError(control, e) from e
        logger.info(
            "%s control %g (eta %.4f): policy l1 %.4f",
            plan.method.value,
            control,
            etas[index],
            result.policy.l1_norm(),
        )
        return TrainedLevel(control=control, eta=etas[index], config=config, result=result)

    workers = S3RRSettings.from_environ().get_workers(workers)
    if workers <= 1:
        return [run(index) for index in range(len(plan.controls))]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, range(len(plan.controls))))


def scoring_level(levels: Sequence[TrainedLevel]) -> TrainedLevel:
    """The least-degraded run; its reward model scores every trajectory of the dataset."""
    return min(levels, key=lambda level: level.eta)


class SystematicDegradationBackend(BaseDegradationBackend):
    def __init__(self, plan: DegradationPlan, airl_config: AirlConfig) -> None:
        if not plan.is_systematic:
            raise ConfigError(f"{plan.method.value} is not a systematic method", "degradation.method")
        super().__init__(plan)
        self.airl_config = airl_config

    def generate(
        self,
        env: BaseEnvironment,
        demos: Sequence[Trajectory],
        airl_result: AirlResult | None,
        rng: np.random.Generator,
    ) -> DegradationDataset:
        seed = draw_seed(rng)
        levels = train_degradation_runs(env, demos, self.plan, self.airl_config, seed)
        scoring_model = scoring_level(levels).result.reward_model
        trajectories: list[Trajectory] = []
        runs: list[DegradationRun] = []
        for index, level in sorted(enumerate(levels), key=lambda item: item[1].eta):
            rollouts = collect_rollouts(
                env,
                level.result.policy,
                self.plan.trajectories_per_level,
                derive_seed(seed, "level", index),
                eta=level.eta,
            )
            trajectories.extend(score_trajectory(scoring_model, t) for t in rollouts)
            runs.append(
                DegradationRun(
                    control=float(level.control),
                    eta=level.eta,
                    l1_norm=level.result.policy.l1_norm(),
                    mean_gt_return=mean_gt_return(rollouts),
                )
            )
        return self._assemble(env, trajectories, runs, scoring_model.digest(), seed)


def generate_systematic_dataset(
    env: BaseEnvironment,
    demos: Sequence[Trajectory],
    plan: DegradationPlan,
    rng: np.random.Generator,
    airl_config: AirlConfig | None = None,
) -> DegradationDataset:
    backend = SystematicDegradationBackend(plan, airl_config or AirlConfig())
    return backend.generate(env, demos, None, rng)
