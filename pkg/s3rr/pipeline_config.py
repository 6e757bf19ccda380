"""The JSON run configuration: one section per pipeline stage plus the master seed."""

import dataclasses
import hashlib
import json
import types
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Union, get_args, get_origin, get_type_hints

from s3rr.constants import DegradationMethod, DemonstratorKind
from s3rr.exceptions import ConfigError, S3RRError
from s3rr.services.airl.adversarial import AirlConfig
from s3rr.services.degradation_backends.base import DEFAULT_TRAJECTORIES_PER_LEVEL, DegradationPlan
from s3rr.services.degradation_backends.eta_mapping import LEVELS_FIELD, eta_grid_noise
from s3rr.services.environments import make_env
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.demonstrators import DemonstratorSpec
from s3rr.services.evaluation.test_split import TestSplitConfig
from s3rr.services.reward_regression.regression import RewardRegressionConfig
from s3rr.services.reward_regression.sigmoid_fit import FitConfig
from s3rr.services.rl.reinforce import RLConfig


MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class DemonstratorSection:
    kind: DemonstratorKind | None = None
    gain: float = 2.0
    noise: float = 0.3
    epsilon: float = 0.3


@dataclass(frozen=True)
class EnvSection:
    id: str = "reach1d"  # noqa: A003
    n_demos: int = 10
    options: Mapping[str, Any] = field(default_factory=dict)
    demonstrator: DemonstratorSection = field(default_factory=DemonstratorSection)

    def __post_init__(self) -> None:
        if self.n_demos < 1:
            raise ConfigError(f"must be >= 1, got {self.n_demos}", "env.n_demos")

    def make_env(self) -> BaseEnvironment:
        try:
            return make_env(self.id, **dict(self.options))
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e), "env.options") from e

    def demonstrator_spec(self, env: BaseEnvironment) -> DemonstratorSpec:
        section = self.demonstrator
        return DemonstratorSpec(
            kind=section.kind or env.default_demonstrator,
            gain=section.gain,
            noise=section.noise,
            epsilon=section.epsilon,
        )


@dataclass(frozen=True)
class DegradationSection:
    method: DegradationMethod = DegradationMethod.NOISE
    levels: tuple[float, ...] | None = None
    n_levels: int = 21
    trajectories_per_level: int = DEFAULT_TRAJECTORIES_PER_LEVEL

    def plan(self) -> DegradationPlan:
        if self.levels is None:
            if self.method != DegradationMethod.NOISE:
                raise ConfigError(f"required for the {self.method.value} method", LEVELS_FIELD)
            controls = tuple(eta_grid_noise(self.n_levels))
        else:
            controls = tuple(float(level) for level in self.levels)
        return DegradationPlan(self.method, controls, self.trajectories_per_level)


@dataclass(frozen=True)
class EvalSection:
    m: int = 50
    test: TestSplitConfig = field(default_factory=TestSplitConfig)

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError(f"must be >= 1, got {self.m}", "eval.m")


@dataclass(frozen=True)
class PipelineConfig:
    seed: int
    env: EnvSection = field(default_factory=EnvSection)
    airl: AirlConfig = field(default_factory=AirlConfig)
    degradation: DegradationSection = field(default_factory=DegradationSection)
    curvefit: FitConfig = field(default_factory=FitConfig)
    reward: RewardRegressionConfig = field(default_factory=RewardRegressionConfig)
    rl: RLConfig = field(default_factory=RLConfig)
    eval: EvalSection = field(default_factory=EvalSection)  # noqa: A003
    out_dir: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return _plain(self)

    def digest(self) -> str:
        return config_digest(self.to_dict())


SECTIONS: dict[str, type] = {
    "env": EnvSection,
    "airl": AirlConfig,
    "degradation": DegradationSection,
    "curvefit": FitConfig,
    "reward": RewardRegressionConfig,
    "rl": RLConfig,
    "eval": EvalSection,
}


def _plain(value: Any) -> Any:
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_plain(v) for v in value]
    return value


def config_digest(payload: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical (sorted-key) JSON form."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(text.encode()).hexdigest()


def _coerce(value: Any, hint: Any, path: str) -> Any:
    if get_origin(hint) in (Union, types.UnionType):
        args = [arg for arg in get_args(hint) if arg is not type(None)]
        if value is None:
            if len(args) < len(get_args(hint)):
                return None
            raise ConfigError("must not be null", path)
        hint = args[0]
    if isinstance(hint, type) and issubclass(hint, Enum):
        try:
            return hint(value)
        except ValueError as e:
            choices = ", ".join(member.value for member in hint)
            raise ConfigError(f"expected one of [{choices}], got {value!r}", path) from e
    if isinstance(hint, type) and dataclasses.is_dataclass(hint):
        if not isinstance(value, Mapping):
            raise ConfigError(f"expected an object, got {value!r}", path)
        return build_section(hint, value, path)
    if get_origin(hint) is tuple:
        if not isinstance(value, list | tuple):
            raise ConfigError(f"expected a list, got {value!r}", path)
        return tuple(value)
    if hint is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if hint in (int, float, bool, str) and not isinstance(value, hint):
        raise ConfigError(f"expected {hint.__name__}, got {value!r}", path)
    return value


def build_section(cls: type, data: Mapping[str, Any], path: str) -> Any:
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown field {unknown[0]!r}", f"{path}.{unknown[0]}")
    kwargs = {key: _coerce(value, hints[key], f"{path}.{key}") for key, value in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e), path) from e


def _parse_seed(raw: Mapping[str, Any]) -> int:
    if "seed" not in raw or raw["seed"] is None:
        raise ConfigError("a master seed is required", "seed")
    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError(f"expected an unsigned 64-bit integer, got {seed!r}", "seed")
    return seed


def config_from_dict(raw: Mapping[str, Any]) -> PipelineConfig:
    unknown = sorted(set(raw) - set(SECTIONS) - {"seed", "out_dir"})
    if unknown:
        raise ConfigError("unknown section", unknown[0])
    sections = {
        name: build_section(cls, raw.get(name) or {}, name) for name, cls in SECTIONS.items()
    }
    out_dir = raw.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError(f"expected a path string, got {out_dir!r}", "out_dir")
    return PipelineConfig(seed=_parse_seed(raw), out_dir=out_dir, **sections)


def parse_override(override: str) -> tuple[list[str], Any]:
    """``a.b.c=value``; the value is parsed as JSON, falling back to a plain string."""
    key, sep, text = override.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {override!r} is not of the form path=value", "--set")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    return key.strip().split("."), value


def apply_overrides(raw: Mapping[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    result = json.loads(json.dumps(raw))
    for override in overrides:
        keys, value = parse_override(override)
        node = result
        for key in keys[:-1]:
            child = node.setdefault(key, {})
            if not isinstance(child, dict):
                raise ConfigError(f"{key!r} is not a section", ".".join(keys))
            node = child
        node[keys[-1]] = value
    return result


def read_config_document(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}", "config") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}", "config") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} must hold a JSON object", "config")
    return raw


def load_config(path: str | Path, overrides: Sequence[str] = ()) -> PipelineConfig:
    config = config_from_dict(apply_overrides(read_config_document(path), overrides))
    violations = cross_check(config)
    if violations:
        field_path, message = violations[0]
        raise ConfigError(message, field_path)
    return config


def cross_check(config: PipelineConfig) -> list[tuple[str, str]]:
    """Violations spanning several sections."""
    violations: list[tuple[str, str]] = []
    try:
        env = config.env.make_env()
        env.build_demonstrator(config.env.demonstrator_spec(env))
    except ConfigError as e:
        violations.append((e.field_path or "env", _bare_message(e)))
    except (ValueError, S3RRError) as e:
        violations.append(("env", str(e)))
    try:
        plan = config.degradation.plan()
        if plan.method == DegradationMethod.DEMO_COUNT and max(plan.controls) > config.env.n_demos:
            violations.append(
                (LEVELS_FIELD, f"demo counts exceed env.n_demos={config.env.n_demos}")
            )
    except ConfigError as e:
        violations.append((e.field_path or "degradation", _bare_message(e)))
    subset = config.airl.demo_subset_size
    if subset is not None and subset > config.env.n_demos:
        violations.append(
            ("airl.demo_subset_size", f"{subset} exceeds env.n_demos={config.env.n_demos}")
        )
    return violations


def _bare_message(error: ConfigError) -> str:
    text = str(error)
    prefix = f"{error.field_path}: "
    return text[len(prefix) :] if error.field_path and text.startswith(prefix) else text


def validate_config(raw: Mapping[str, Any]) -> list[tuple[str, str]]:
    """Every violation found in a raw config document, as ``(field_path, message)``."""
    violations: list[tuple[str, str]] = []
    try:
        _parse_seed(raw)
    except ConfigError as e:
        violations.append((e.field_path, _bare_message(e)))
    for name in sorted(set(raw) - set(SECTIONS) - {"seed", "out_dir"}):
        violations.append((name, "unknown section"))
    sections: dict[str, Any] = {}
    for name, cls in SECTIONS.items():
        try:
            sections[name] = build_section(cls, raw.get(name) or {}, name)
        except ConfigError as e:
            violations.append((e.field_path, _bare_message(e)))
    if len(sections) == len(SECTIONS):
        # the seed plays no part in cross-section checks
        violations.extend(cross_check(PipelineConfig(seed=0, **sections)))
    elif "degradation" in sections:
        try:
            sections["degradation"].plan()
        except ConfigError as e:
            violations.append((e.field_path, _bare_message(e)))
    return violations
