from s3rr.services.rl.reinforce import (
    LearningCurveRow,
    RewardFn,
    RLConfig,
    TrainResult,
    ValueBaseline,
    policy_gradient_estimate,
    train_policy,
)


__all__ = [
    "LearningCurveRow",
    "RLConfig",
    "RewardFn",
    "TrainResult",
    "ValueBaseline",
    "policy_gradient_estimate",
    "train_policy",
]
