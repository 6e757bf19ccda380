from s3rr.services.airl.adversarial import (
    AirlConfig,
    AirlLogRow,
    AirlResult,
    PairBatch,
    clone_demonstrations,
    discriminator_accuracy,
    discriminator_loss,
    discriminator_value,
    heldout_accuracy,
    select_demonstrations,
    train_airl,
)
from s3rr.services.reward_models import score_trajectory


__all__ = [
    "AirlConfig",
    "AirlLogRow",
    "AirlResult",
    "PairBatch",
    "clone_demonstrations",
    "discriminator_accuracy",
    "discriminator_loss",
    "discriminator_value",
    "heldout_accuracy",
    "score_trajectory",
    "select_demonstrations",
    "train_airl",
]
