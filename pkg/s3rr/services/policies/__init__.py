from s3rr.services.policies.mixture import (
    MixturePolicy,
    UniformPolicy,
    mixture_probabilities,
    mixture_sample,
)
from s3rr.services.policies.stochastic_policy import (
    CategoricalPolicy,
    GaussianPolicy,
    StochasticPolicy,
    build_policy,
)


__all__ = [
    "CategoricalPolicy",
    "GaussianPolicy",
    "MixturePolicy",
    "StochasticPolicy",
    "UniformPolicy",
    "build_policy",
    "mixture_probabilities",
    "mixture_sample",
]
