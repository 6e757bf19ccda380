from s3rr.services.approximators.mlp import forward, gradient, l1_penalty
from s3rr.services.approximators.optimizers import OptimizerState, optimizer_step


__all__ = ["OptimizerState", "forward", "gradient", "l1_penalty", "optimizer_step"]
