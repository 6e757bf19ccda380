import json
from pathlib import Path
from unittest import TestCase

import numpy as np
import pytest

from s3rr.constants import Provenance
from s3rr.exceptions import DatasetParseError, SerializationError, TrajectoryValidationError
from s3rr.services.dataclasses import DegradationDataset, SpaceSpec, Trajectory
from s3rr.services.policies import build_policy
from s3rr.services.reward_models import build_reward_model
from s3rr.services.serialization import (
    file_digest,
    load_dataset,
    load_policy,
    load_reward_model,
    manifest_path,
    read_csv,
    save_dataset,
    save_policy,
    save_reward_model,
    write_csv,
    write_json,
)


def noisy_dataset(rng: np.random.Generator) -> DegradationDataset:
    trajectories = [
        Trajectory.from_arrays(
            eta=eta,
            states=rng.normal(size=(3, 1)),
            actions=rng.normal(size=(3, 1)),
            initial_rewards=rng.normal(size=3),
            gt_return=float(rng.normal()),
        )
        for eta in (0.0, 0.0, 0.5, 1.0)
    ]
    return DegradationDataset.from_trajectories(
        "reach1d", trajectories, Provenance.NOISE, seed=11, metadata={"runs": [{"eta": 0.0}]}
    )


class DatasetFileTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, tmp_path: Path, rng: np.random.Generator) -> None:
        self.path = tmp_path / "degradation.jsonl"
        self.dataset = noisy_dataset(rng)

    def test_save_then_load_restores_every_field(self):
        save_dataset(self.dataset, self.path)

        assert load_dataset(self.path) == self.dataset

    def test_manifest_sits_next_to_the_records(self):
        save_dataset(self.dataset, self.path)
        header = json.loads(manifest_path(self.path).read_text())

        assert manifest_path(self.path).name == "degradation.manifest.json"
        assert header["n_trajectories"] == 4
        assert header["provenance"] == "noise"
        assert header["levels"] == [0.0, 0.5, 1.0]

    def test_one_record_per_line(self):
        save_dataset(self.dataset, self.path)

        assert len(self.path.read_text().splitlines()) == 4

    def test_malformed_line_names_the_record(self):
        save_dataset(self.dataset, self.path)
        lines = self.path.read_text().splitlines()
        lines[2] = "{not json"
        self.path.write_text("\n".join(lines) + "\n")

        with pytest.raises(DatasetParseError) as excinfo:
            load_dataset(self.path)
        assert excinfo.value.record_index == 2

    def test_missing_key_is_a_parse_error(self):
        save_dataset(self.dataset, self.path)
        lines = self.path.read_text().splitlines()
        record = json.loads(lines[1])
        del record["actions"]
        lines[1] = json.dumps(record)
        self.path.write_text("\n".join(lines) + "\n")

        with pytest.raises(DatasetParseError) as excinfo:
            load_dataset(self.path)
        assert excinfo.value.record_index == 1

    def test_invalid_record_fails_validation_with_its_index(self):
        save_dataset(self.dataset, self.path)
        lines = self.path.read_text().splitlines()
        record = json.loads(lines[0])
        record["eta"] = 2.0
        lines[0] = json.dumps(record)
        self.path.write_text("\n".join(lines) + "\n")

        with pytest.raises(TrajectoryValidationError, match="record 0"):
            load_dataset(self.path)

    def test_truncated_file_is_detected(self):
        save_dataset(self.dataset, self.path)
        lines = self.path.read_text().splitlines()
        self.path.write_text("\n".join(lines[:3]) + "\n")

        with pytest.raises(DatasetParseError, match="expected 4 records"):
            load_dataset(self.path)

    def test_missing_manifest_is_reported(self):
        save_dataset(self.dataset, self.path)
        manifest_path(self.path).unlink()

        with pytest.raises(SerializationError):
            load_dataset(self.path)


class CheckpointTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, tmp_path: Path, rng: np.random.Generator) -> None:
        self.tmp_path = tmp_path
        self.rng = rng

    def test_reward_model_checkpoint_predicts_identically(self):
        model = build_reward_model(SpaceSpec.box([0.0, 0.0], [4.0, 4.0]), SpaceSpec.discrete(4), 2, 5, self.rng)
        path = self.tmp_path / "reward_model.json"
        save_reward_model(model, path)
        loaded = load_reward_model(path)

        states = self.rng.uniform(0, 4, size=(6, 2))
        actions = self.rng.integers(0, 4, size=(6, 1)).astype(float)
        np.testing.assert_array_equal(loaded(states, actions), model(states, actions))
        assert loaded.digest() == model.digest()

    def test_gaussian_policy_checkpoint_keeps_log_std(self):
        policy = build_policy(SpaceSpec.box([-1.0], [1.0]), SpaceSpec.box([-1.0], [1.0]), 1, 4, self.rng, -1.0)
        path = self.tmp_path / "policy.json"
        save_policy(policy, path)
        loaded = load_policy(path)

        np.testing.assert_array_equal(loaded.flat_params, policy.flat_params)
        assert loaded.head == policy.head

    def test_categorical_policy_checkpoint(self):
        policy = build_policy(SpaceSpec.box([0.0], [1.0]), SpaceSpec.discrete(3), 1, 4, self.rng)
        path = self.tmp_path / "policy.json"
        save_policy(policy, path)

        np.testing.assert_array_equal(load_policy(path).probabilities(np.array([0.5])), policy.probabilities(np.array([0.5])))

    def test_corrupt_checkpoint_raises_serialization_error(self):
        path = self.tmp_path / "policy.json"
        write_json(path, {"head": "gaussian"})

        with pytest.raises(SerializationError):
            load_policy(path)


class FileHelpersTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, tmp_path: Path) -> None:
        self.tmp_path = tmp_path

    def test_write_json_is_canonical(self):
        first, second = self.tmp_path / "a.json", self.tmp_path / "b.json"
        write_json(first, {"b": 1, "a": [1.5, None]})
        write_json(second, {"a": [1.5, None], "b": 1})

        assert first.read_bytes() == second.read_bytes()
        assert file_digest(first) == file_digest(second)
        assert first.read_text().endswith("}\n")

    def test_write_json_rejects_nan(self):
        with pytest.raises(SerializationError):
            write_json(self.tmp_path / "a.json", {"r": float("nan")})

    def test_csv_writes_blank_for_none(self):
        path = self.tmp_path / "rows.csv"
        write_csv(path, [{"x": 1, "y": None}, {"x": 2.5, "y": "a"}], ("x", "y"))

        assert path.read_text() == "x,y\n1,\n2.5,a\n"
        assert read_csv(path) == [{"x": "1", "y": ""}, {"x": "2.5", "y": "a"}]
