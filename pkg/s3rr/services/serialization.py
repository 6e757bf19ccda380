"""On-disk formats.

Datasets are JSON-lines, one trajectory per line, with a sidecar
``<stem>.manifest.json`` describing the dataset. Checkpoints and reports are
JSON with sorted keys; curves are CSV. Floats are written with ``repr``, which
round-trips exactly.
"""

import csv
import hashlib
import json
import logging
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from s3rr.constants import PolicyHead, Provenance
from s3rr.exceptions import (
    DatasetParseError,
    S3RRError,
    SerializationError,
    TrajectoryValidationError,
)
from s3rr.model_factory import ApproximatorSpec, ParamVector
from s3rr.services.dataclasses import DegradationDataset, SpaceSpec, Trajectory
from s3rr.services.policies.stochastic_policy import (
    CategoricalPolicy,
    GaussianPolicy,
    StochasticPolicy,
)
from s3rr.services.reward_models import ApproximatorReward


logger = logging.getLogger(__name__)

RECORD_KEYS = ("eta", "states", "actions", "initial_rewards", "gt_return")


def _dumps(payload: Any, indent: int | None = None) -> str:
    try:
        return json.dumps(payload, sort_keys=True, allow_nan=False, indent=indent)
    except (TypeError, ValueError) as e:
        raise SerializationError(f"cannot encode value as JSON: {e}") from e


def write_json(path: str | Path, payload: Any) -> None:
    path = Path(path)
    text = _dumps(payload, indent=2) + "\n"
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise SerializationError(str(e), str(path)) from e


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise SerializationError(str(e), str(path)) from e
    except json.JSONDecodeError as e:
        raise SerializationError(f"invalid JSON: {e}", str(path)) from e


def write_csv(path: str | Path, rows: Iterable[Mapping[str, Any]], fieldnames: Sequence[str]) -> None:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(fieldnames), lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: "" if row[key] is None else row[key] for key in fieldnames})
    except OSError as e:
        raise SerializationError(str(e), str(path)) from e


def read_csv(path: str | Path) -> list[dict[str, str]]:
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as handle:
            return list(csv.DictReader(handle))
    except OSError as e:
        raise SerializationError(str(e), str(path)) from e


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.manifest.json")


def trajectory_to_record(trajectory: Trajectory) -> dict[str, Any]:
    return {
        "eta": trajectory.eta,
        "states": [list(row) for row in trajectory.states],
        "actions": [list(row) for row in trajectory.actions],
        "initial_rewards": list(trajectory.initial_rewards),
        "gt_return": trajectory.gt_return,
    }


def trajectory_from_record(record: Mapping[str, Any]) -> Trajectory:
    missing = [key for key in RECORD_KEYS if key not in record]
    if missing:
        raise KeyError(f"missing keys {missing}")
    return Trajectory.from_arrays(
        eta=record["eta"],
        states=record["states"],
        actions=record["actions"],
        initial_rewards=record["initial_rewards"],
        gt_return=record["gt_return"],
    )


def save_dataset(dataset: DegradationDataset, path: str | Path) -> None:
    path = Path(path)
    lines = [_dumps(trajectory_to_record(t)) for t in dataset.trajectories]
    header = {
        "env_id": dataset.env_id,
        "provenance": dataset.provenance.value,
        "levels": list(dataset.levels),
        "seed": dataset.seed,
        "n_trajectories": len(dataset),
        "metadata": dict(dataset.metadata),
    }
    try:
        path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    except OSError as e:
        raise SerializationError(str(e), str(path)) from e
    write_json(manifest_path(path), header)
    logger.debug("wrote %d trajectories to %s", len(lines), path)


def load_dataset(path: str | Path) -> DegradationDataset:
    path = Path(path)
    header = read_json(manifest_path(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SerializationError(str(e), str(path)) from e

    trajectories: list[Trajectory] = []
    for index, line in enumerate(text.splitlines()):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise DatasetParseError(f"malformed record: {e.msg}", str(path), index) from e
        try:
            trajectories.append(trajectory_from_record(record))
        except (KeyError, TypeError, ValueError) as e:
            raise DatasetParseError(f"malformed record: {e}", str(path), index) from e
        except TrajectoryValidationError as e:
            raise TrajectoryValidationError(f"{path}: record {index}: {e}") from e

    expected = int(header.get("n_trajectories", len(trajectories)))
    if len(trajectories) != expected:
        raise DatasetParseError(
            f"expected {expected} records, found {len(trajectories)}", str(path), len(trajectories)
        )
    dataset = DegradationDataset(
        env_id=str(header["env_id"]),
        trajectories=tuple(trajectories),
        levels=tuple(float(level) for level in header["levels"]),
        provenance=Provenance(header["provenance"]),
        seed=header.get("seed"),
        metadata=header.get("metadata", {}),
    )
    return dataset


def reward_model_from_dict(data: Mapping[str, Any]) -> ApproximatorReward:
    spec = ApproximatorSpec.from_dict(data["spec"])
    return ApproximatorReward(
        spec,
        ParamVector(spec, np.array(data["params"], dtype=float)),
        SpaceSpec.from_dict(data["state_space"]),
        SpaceSpec.from_dict(data["action_space"]),
    )


def save_reward_model(reward_model: ApproximatorReward, path: str | Path) -> None:
    write_json(path, reward_model.to_dict())


def load_reward_model(path: str | Path) -> ApproximatorReward:
    try:
        return reward_model_from_dict(read_json(path))
    except (KeyError, TypeError, ValueError, S3RRError) as e:
        raise SerializationError(f"invalid reward checkpoint: {e}", str(path)) from e


def policy_to_dict(policy: StochasticPolicy) -> dict[str, Any]:
    payload = {
        "head": policy.head.value,
        "spec": policy.spec.to_dict(),
        "params": [float(v) for v in policy.params.values],
        "action_space": policy.action_space.to_dict(),
    }
    if isinstance(policy, GaussianPolicy):
        payload["log_std"] = [float(v) for v in policy.log_std]
    return payload


def policy_from_dict(data: Mapping[str, Any]) -> StochasticPolicy:
    spec = ApproximatorSpec.from_dict(data["spec"])
    params = ParamVector(spec, np.array(data["params"], dtype=float))
    action_space = SpaceSpec.from_dict(data["action_space"])
    if PolicyHead(data["head"]) == PolicyHead.CATEGORICAL:
        return CategoricalPolicy(spec, params, action_space)
    return GaussianPolicy(spec, params, action_space, np.array(data["log_std"], dtype=float))


def save_policy(policy: StochasticPolicy, path: str | Path) -> None:
    write_json(path, policy_to_dict(policy))


def load_policy(path: str | Path) -> StochasticPolicy:
    try:
        return policy_from_dict(read_json(path))
    except (KeyError, TypeError, ValueError, S3RRError) as e:
        raise SerializationError(f"invalid policy checkpoint: {e}", str(path)) from e
