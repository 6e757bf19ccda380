from typing import Any

from s3rr.exceptions import ConfigError
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.grid5 import Grid5
from s3rr.services.environments.reach1d import Reach1D


ENVIRONMENTS: dict[str, type[BaseEnvironment]] = {
    "reach1d": Reach1D,
    "grid5": Grid5,
}


def make_env(env_id: str, **options: Any) -> BaseEnvironment:
    try:
        env_cls = ENVIRONMENTS[env_id]
    except KeyError as e:
        raise ConfigError(
            f"unknown environment {env_id!r}; expected one of {sorted(ENVIRONMENTS)}", "env.id"
        ) from e
    return env_cls(**options)


__all__ = ["ENVIRONMENTS", "BaseEnvironment", "Grid5", "Reach1D", "make_env"]
