from abc import ABC, abstractmethod
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from s3rr.constants import DegradationMethod, Provenance
from s3rr.exceptions import ConfigError
from s3rr.services.airl.adversarial import AirlResult
from s3rr.services.dataclasses import DegradationDataset, Trajectory
from s3rr.services.degradation_backends.eta_mapping import eta_from_control, eta_grid_noise
from s3rr.services.environments.base import BaseEnvironment


DEFAULT_TRAJECTORIES_PER_LEVEL = 10


@dataclass(frozen=True)
class DegradationPlan:
    """How degraded trajectories are produced.

    ``controls`` are η values for noise injection, demonstration counts,
    hidden-layer counts or L1 coefficients for the systematic methods.
    """

    method: DegradationMethod
    controls: tuple[float, ...]
    trajectories_per_level: int = DEFAULT_TRAJECTORIES_PER_LEVEL

    def __post_init__(self) -> None:
        if self.trajectories_per_level < 1:
            raise ConfigError(
                f"must be >= 1, got {self.trajectories_per_level}",
                "degradation.trajectories_per_level",
            )
        # raises on fewer than two or duplicate controls
        eta_from_control(self.method, self.controls)

    @classmethod
    def noise(
        cls, n_levels: int, trajectories_per_level: int = DEFAULT_TRAJECTORIES_PER_LEVEL
    ) -> "DegradationPlan":
        return cls(DegradationMethod.NOISE, tuple(eta_grid_noise(n_levels)), trajectories_per_level)

    @property
    def etas(self) -> list[float]:
        return eta_from_control(self.method, self.controls)

    @property
    def provenance(self) -> Provenance:
        return Provenance(self.method.value)

    @property
    def is_systematic(self) -> bool:
        return self.method != DegradationMethod.NOISE


@dataclass(frozen=True)
class DegradationRun:
    """Per-level summary kept alongside a generated dataset."""

    control: float
    eta: float
    l1_norm: float
    mean_gt_return: float

    def to_dict(self) -> dict[str, float]:
        return {
            "control": self.control,
            "eta": self.eta,
            "l1_norm": self.l1_norm,
            "mean_gt_return": self.mean_gt_return,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DegradationRun":
        return cls(**{key: float(data[key]) for key in ("control", "eta", "l1_norm", "mean_gt_return")})


class BaseDegradationBackend(ABC):
    plan: DegradationPlan

    def __init__(self, plan: DegradationPlan) -> None:
        self.plan = plan

    @abstractmethod
    def generate(
        self,
        env: BaseEnvironment,
        demos: Sequence[Trajectory],
        airl_result: AirlResult | None,
        rng: np.random.Generator,
    ) -> DegradationDataset:
        """Build the scored, η-labelled degradation dataset."""

    def _assemble(
        self,
        env: BaseEnvironment,
        trajectories: list[Trajectory],
        runs: list[DegradationRun],
        scoring_digest: str,
        seed: int,
    ) -> DegradationDataset:
        return DegradationDataset.from_trajectories(
            env.id,
            trajectories,
            self.plan.provenance,
            seed=seed,
            metadata={
                "controls": list(self.plan.controls),
                "scoring_model": scoring_digest,
                "trajectories_per_level": self.plan.trajectories_per_level,
                "runs": [run.to_dict() for run in runs],
            },
        )
