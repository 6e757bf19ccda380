import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any

import numpy as np

from s3rr.constants import Provenance, SpaceKind
from s3rr.exceptions import (
    DatasetValidationError,
    SpaceError,
    TrajectoryValidationError,
)


@dataclass(frozen=True)
class SpaceSpec:
    kind: SpaceKind
    dim: int = 1
    cardinality: int = 0
    bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind == SpaceKind.DISCRETE:
            if self.cardinality < 2:
                raise SpaceError(f"discrete space needs cardinality >= 2, got {self.cardinality}")
            return
        if self.dim < 1:
            raise SpaceError(f"continuous space needs dim >= 1, got {self.dim}")
        if len(self.bounds) != self.dim:
            raise SpaceError(f"expected {self.dim} bounds, got {len(self.bounds)}")
        for lo, hi in self.bounds:
            if not lo < hi:
                raise SpaceError(f"bounds must satisfy lo < hi, got [{lo}, {hi}]")

    @classmethod
    def discrete(cls, cardinality: int) -> "SpaceSpec":
        return cls(kind=SpaceKind.DISCRETE, dim=1, cardinality=cardinality)

    @classmethod
    def box(cls, lows: Sequence[float], highs: Sequence[float]) -> "SpaceSpec":
        bounds = tuple((float(lo), float(hi)) for lo, hi in zip(lows, highs, strict=True))
        return cls(kind=SpaceKind.CONTINUOUS, dim=len(bounds), bounds=bounds)

    @property
    def is_discrete(self) -> bool:
        return self.kind == SpaceKind.DISCRETE

    @property
    def vector_dim(self) -> int:
        """Width of a stored action/state vector (discrete values are one index)."""
        return 1 if self.is_discrete else self.dim

    @property
    def encoding_dim(self) -> int:
        """Width of the network-facing encoding (one-hot for discrete spaces)."""
        return self.cardinality if self.is_discrete else self.dim

    @property
    def low(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def high(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    @property
    def uniform_log_density(self) -> float:
        """log U(a) for the draws of ``sample_uniform``."""
        if self.is_discrete:
            return -float(np.log(self.cardinality))
        return -float(np.sum(np.log(self.high - self.low)))

    def sample_uniform(self, rng: np.random.Generator) -> np.ndarray:
        if self.is_discrete:
            return np.array([float(rng.integers(self.cardinality))])
        return rng.uniform(self.low, self.high)

    def clip(self, value: np.ndarray) -> np.ndarray:
        if self.is_discrete:
            return value
        return np.clip(value, self.low, self.high)

    def encode(self, values: np.ndarray) -> np.ndarray:
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if not self.is_discrete:
            return values
        indices = values[:, 0].astype(int)
        if np.any(indices < 0) or np.any(indices >= self.cardinality):
            raise SpaceError(f"discrete value outside [0, {self.cardinality})")
        return np.eye(self.cardinality)[indices]

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind.value,
            "dim": self.dim,
            "cardinality": self.cardinality,
            "bounds": [list(b) for b in self.bounds],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SpaceSpec":
        return cls(
            kind=SpaceKind(data["kind"]),
            dim=int(data["dim"]),
            cardinality=int(data["cardinality"]),
            bounds=tuple((float(lo), float(hi)) for lo, hi in data["bounds"]),
        )


def _as_rows(values: Iterable[Iterable[float]] | np.ndarray) -> tuple[tuple[float, ...], ...]:
    return tuple(tuple(float(v) for v in np.atleast_1d(row)) for row in values)


@dataclass(frozen=True)
class Trajectory:
    """One rollout. ``states[t]`` is paired with ``actions[t]``; the terminal
    state is not stored. ``actions`` hold what the policy emitted, before the
    environment clips them.
    """

    eta: float
    states: tuple[tuple[float, ...], ...]
    actions: tuple[tuple[float, ...], ...]
    initial_rewards: tuple[float, ...] = ()
    gt_return: float | None = None

    def __post_init__(self) -> None:
        if not len(self.states) == len(self.actions):
            raise TrajectoryValidationError(
                f"states and actions differ in length: {len(self.states)} != {len(self.actions)}"
            )
        if self.initial_rewards and len(self.initial_rewards) != len(self.states):
            raise TrajectoryValidationError(
                f"initial_rewards length {len(self.initial_rewards)} != {len(self.states)} steps"
            )
        if not math.isfinite(self.eta) or not 0.0 <= self.eta <= 1.0:
            raise TrajectoryValidationError(f"eta out of [0,1]: {self.eta}")
        if self.gt_return is not None and not math.isfinite(self.gt_return):
            raise TrajectoryValidationError("gt_return is not finite")
        for name in ("states", "actions"):
            rows = getattr(self, name)
            if not all(math.isfinite(v) for row in rows for v in row):
                raise TrajectoryValidationError(f"{name} contain non-finite values")
        if not all(math.isfinite(v) for v in self.initial_rewards):
            raise TrajectoryValidationError("initial_rewards contain non-finite values")

    @classmethod
    def from_arrays(
        cls,
        eta: float,
        states: np.ndarray | Sequence[Sequence[float]],
        actions: np.ndarray | Sequence[Sequence[float]],
        initial_rewards: np.ndarray | Sequence[float] = (),
        gt_return: float | None = None,
    ) -> "Trajectory":
        return cls(
            eta=float(eta),
            states=_as_rows(states),
            actions=_as_rows(actions),
            initial_rewards=tuple(float(r) for r in initial_rewards),
            gt_return=None if gt_return is None else float(gt_return),
        )

    def __len__(self) -> int:
        return len(self.states)

    @cached_property
    def state_array(self) -> np.ndarray:
        return np.array(self.states, dtype=float).reshape(len(self.states), -1)

    @cached_property
    def action_array(self) -> np.ndarray:
        return np.array(self.actions, dtype=float).reshape(len(self.actions), -1)

    @property
    def is_scored(self) -> bool:
        return len(self.initial_rewards) == len(self.states) and len(self.states) > 0

    def with_initial_rewards(self, rewards: np.ndarray | Sequence[float]) -> "Trajectory":
        return replace(self, initial_rewards=tuple(float(r) for r in rewards))

    def with_eta(self, eta: float) -> "Trajectory":
        return replace(self, eta=float(eta))


def trajectory_return(trajectory: Trajectory) -> float:
    if not trajectory.initial_rewards:
        raise TrajectoryValidationError("cannot compute the return of an unscored trajectory")
    return math.fsum(trajectory.initial_rewards)


@dataclass(frozen=True)
class DegradationDataset:
    env_id: str
    trajectories: tuple[Trajectory, ...]
    levels: tuple[float, ...]
    provenance: Provenance
    seed: int | None = None
    metadata: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if any(a >= b for a, b in zip(self.levels, self.levels[1:], strict=False)):
            raise DatasetValidationError("levels must be sorted ascending and distinct")
        if self.provenance.is_degradation and len(self.levels) < 2:
            raise DatasetValidationError(
                f"≥2 levels required for a {self.provenance.value} dataset, got {len(self.levels)}"
            )
        level_set = set(self.levels)
        counts = dict.fromkeys(self.levels, 0)
        for index, trajectory in enumerate(self.trajectories):
            if trajectory.eta not in level_set:
                raise DatasetValidationError(
                    f"trajectory {index} has eta={trajectory.eta} outside the dataset levels"
                )
            counts[trajectory.eta] += 1
        empty = [level for level, count in counts.items() if count == 0]
        if empty:
            raise DatasetValidationError(f"levels without trajectories: {empty}")

    @classmethod
    def from_trajectories(
        cls,
        env_id: str,
        trajectories: Iterable[Trajectory],
        provenance: Provenance,
        seed: int | None = None,
        metadata: Mapping[str, Any] | None = None,
    ) -> "DegradationDataset":
        trajectories = tuple(trajectories)
        return cls(
            env_id=env_id,
            trajectories=trajectories,
            levels=tuple(sorted({t.eta for t in trajectories})),
            provenance=provenance,
            seed=seed,
            metadata=dict(metadata or {}),
        )

    def __len__(self) -> int:
        return len(self.trajectories)

    def by_level(self) -> dict[float, list[Trajectory]]:
        grouped: dict[float, list[Trajectory]] = {level: [] for level in self.levels}
        for trajectory in self.trajectories:
            grouped[trajectory.eta].append(trajectory)
        return grouped

    def return_points(self) -> list[tuple[float, float]]:
        """(η, scored return) per trajectory, the input of the sigmoid fit."""
        return [(t.eta, trajectory_return(t)) for t in self.trajectories]


@dataclass(frozen=True)
class SigmoidParams:
    c: float
    k: float
    x0: float
    y0: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.c, self.k, self.x0, self.y0)):
            raise ValueError(f"sigmoid parameters must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.c, self.k, self.x0, self.y0])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "SigmoidParams":
        c, k, x0, y0 = (float(v) for v in values)
        return cls(c=c, k=k, x0=x0, y0=y0)


@dataclass(frozen=True)
class RunManifest:
    seed: int
    config_digest: str
    outputs: Mapping[str, Mapping[str, str]] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def with_stage(
        self, stage: str, digests: Mapping[str, str], warnings: Iterable[str] = ()
    ) -> "RunManifest":
        outputs = {name: dict(files) for name, files in self.outputs.items()}
        outputs[stage] = dict(sorted(digests.items()))
        return replace(self, outputs=outputs, warnings=(*self.warnings, *warnings))

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "config_digest": self.config_digest,
            "outputs": {name: dict(files) for name, files in self.outputs.items()},
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunManifest":
        return cls(
            seed=int(data["seed"]),
            config_digest=str(data["config_digest"]),
            outputs={name: dict(files) for name, files in data.get("outputs", {}).items()},
            warnings=tuple(data.get("warnings", ())),
        )
