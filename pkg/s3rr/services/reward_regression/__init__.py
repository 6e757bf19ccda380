from s3rr.services.reward_regression.regression import (
    LossRow,
    RegressionResult,
    RewardRegressionConfig,
    predicted_returns,
    reward_regression,
    ssrr_loss,
    ssrr_loss_and_gradient,
    ssrr_targets,
)
from s3rr.services.reward_regression.sigmoid_fit import (
    FitConfig,
    SigmoidFit,
    fit_degradation_curve,
    fit_sigmoid,
    initial_guesses,
    sigmoid_eval,
)


__all__ = [
    "FitConfig",
    "LossRow",
    "RegressionResult",
    "RewardRegressionConfig",
    "SigmoidFit",
    "fit_degradation_curve",
    "fit_sigmoid",
    "initial_guesses",
    "predicted_returns",
    "reward_regression",
    "sigmoid_eval",
    "ssrr_loss",
    "ssrr_loss_and_gradient",
    "ssrr_targets",
]
