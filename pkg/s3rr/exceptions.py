class S3RRError(Exception):
    pass


class SpaceError(S3RRError):
    pass


class DimensionMismatchError(S3RRError):
    pass


class TrajectoryValidationError(S3RRError):
    pass


class DatasetValidationError(S3RRError):
    pass


class SerializationError(S3RRError):
    def __init__(self, message: str, path: str | None = None) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class DatasetParseError(S3RRError):
    def __init__(self, message: str, path: str, record_index: int) -> None:
        super().__init__(f"{path}: record {record_index}: {message}")
        self.path = path
        self.record_index = record_index


class EnvContractError(S3RRError):
    pass


class RolloutError(S3RRError):
    pass


class NonFiniteGradientError(S3RRError):
    pass


class DivergenceError(S3RRError):
    def __init__(self, stage: str, iteration: int) -> None:
        super().__init__(f"{stage} diverged at iteration {iteration}: non-finite parameters")
        self.stage = stage
        self.iteration = iteration


class AirlRunError(S3RRError):
    def __init__(self, control: float, cause: Exception) -> None:
        super().__init__(f"AIRL run for control value {control} failed: {cause}")
        self.control = control


class SigmoidFitError(S3RRError):
    pass


class UndefinedCorrelationError(S3RRError):
    pass


class DegenerateRangeError(S3RRError):
    pass


class MissingGroundTruthError(S3RRError):
    pass


class ConfigError(S3RRError):
    def __init__(self, message: str, field_path: str = "") -> None:
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class MissingArtifactError(S3RRError):
    def __init__(self, artifact: str, stage: str) -> None:
        super().__init__(f"stage '{stage}' requires missing artifact {artifact}")
        self.artifact = artifact
        self.stage = stage


class RunLockedError(S3RRError):
    def __init__(self, path: str) -> None:
        super().__init__(f"run directory is locked by another process: {path}")
        self.path = path
