from enum import Enum


class SpaceKind(Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


class PolicyHead(Enum):
    CATEGORICAL = "categorical"
    GAUSSIAN = "gaussian"


class OutputTransform(Enum):
    IDENTITY = "identity"
    LOGITS = "logits"


class DemonstratorKind(Enum):
    NOISY_PROPORTIONAL = "noisy_proportional"
    EPSILON_SUBOPTIMAL = "epsilon_suboptimal"


class DegradationMethod(Enum):
    NOISE = "noise"
    DEMO_COUNT = "demo_count"
    CAPACITY = "capacity"
    SPARSITY = "sparsity"


class Provenance(Enum):
    DEMO = "demo"
    TEST = "test"
    NOISE = "noise"
    DEMO_COUNT = "demo_count"
    CAPACITY = "capacity"
    SPARSITY = "sparsity"

    @property
    def is_degradation(self) -> bool:
        return self not in (Provenance.DEMO, Provenance.TEST)


class BaselineKind(Enum):
    MEAN_RETURN = "mean_return"
    LEARNED_VALUE = "learned_value"


class Split(Enum):
    DEMO = "demo"
    DEGRADATION = "degradation"
    TEST = "test"


class Stage(Enum):
    DEMOS = "demos"
    AIRL = "airl"
    DEGRADE = "degrade"
    FIT = "fit"
    REWARD = "reward"
    POLICY = "policy"
    EVAL = "eval"
    PIPELINE = "pipeline"


PIPELINE_STAGES = (
    Stage.DEMOS,
    Stage.AIRL,
    Stage.DEGRADE,
    Stage.FIT,
    Stage.REWARD,
    Stage.POLICY,
    Stage.EVAL,
)

MIN_LOG_STD = -6.907755278982137  # log(1e-3)
MIN_WELL_CONDITIONED_LEVELS = 6
