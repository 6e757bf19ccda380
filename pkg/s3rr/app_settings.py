import logging
import os
from dataclasses import dataclass

from s3rr.exceptions import ConfigError


THREADS_ENV_VAR = "SRRR_THREADS"
LOG_LEVEL_ENV_VAR = "SRRR_LOG_LEVEL"


@dataclass(frozen=True)
class S3RRSettings:
    """Process-level settings read from the environment.

    Nothing here changes what a run computes; ``threads`` only caps how many
    rollouts or solver starts execute at once.
    """

    threads: int = 1
    log_level: str = "INFO"

    @classmethod
    def from_environ(cls) -> "S3RRSettings":
        raw_threads = os.environ.get(THREADS_ENV_VAR, "1")
        try:
            threads = int(raw_threads)
        except ValueError as e:
            raise ConfigError(f"expected an integer, got {raw_threads!r}", THREADS_ENV_VAR) from e
        if threads < 1:
            raise ConfigError(f"must be >= 1, got {threads}", THREADS_ENV_VAR)
        log_level = os.environ.get(LOG_LEVEL_ENV_VAR, "INFO").upper()
        if not isinstance(logging.getLevelName(log_level), int):
            raise ConfigError(f"unknown log level {log_level!r}", LOG_LEVEL_ENV_VAR)
        return cls(threads=threads, log_level=log_level)

    def get_workers(self, requested: int | None = None) -> int:
        if requested is None:
            return self.threads
        return max(1, min(requested, self.threads))
