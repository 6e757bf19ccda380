from s3rr.services.airl.adversarial import AirlConfig
from s3rr.services.degradation_backends.base import (
    BaseDegradationBackend,
    DegradationPlan,
    DegradationRun,
)
from s3rr.services.degradation_backends.eta_mapping import eta_from_control, eta_grid_noise
from s3rr.services.degradation_backends.noise_injection import (
    NoiseInjectionBackend,
    generate_noise_dataset,
)
from s3rr.services.degradation_backends.systematic import (
    SystematicDegradationBackend,
    TrainedLevel,
    apply_control,
    generate_systematic_dataset,
    scoring_level,
    train_degradation_runs,
)


def get_degradation_backend(
    plan: DegradationPlan, airl_config: AirlConfig | None = None
) -> BaseDegradationBackend:
    if plan.is_systematic:
        return SystematicDegradationBackend(plan, airl_config or AirlConfig())
    return NoiseInjectionBackend(plan)


__all__ = [
    "BaseDegradationBackend",
    "DegradationPlan",
    "DegradationRun",
    "NoiseInjectionBackend",
    "SystematicDegradationBackend",
    "TrainedLevel",
    "apply_control",
    "eta_from_control",
    "eta_grid_noise",
    "generate_noise_dataset",
    "generate_systematic_dataset",
    "get_degradation_backend",
    "scoring_level",
    "train_degradation_runs",
]
