"""Staged execution of the full pipeline inside one run directory.

Each stage draws from its own child seed ``derive_seed(seed, stage)``, reads
the artifacts of earlier stages from disk and records digests of its outputs
in ``run_manifest.json``.
"""

import logging
import os
from collections.abc import Callable, Iterable
from pathlib import Path
from types import TracebackType

import numpy as np

from s3rr.constants import PIPELINE_STAGES, DegradationMethod, Provenance, Split, Stage
from s3rr.exceptions import MissingArtifactError, RunLockedError
from s3rr.pipeline_config import PipelineConfig
from s3rr.seeding import derive_seed, draw_seed, make_rng
from s3rr.services.airl.adversarial import AirlResult, heldout_accuracy, train_airl
from s3rr.services.dataclasses import DegradationDataset, RunManifest
from s3rr.services.degradation_backends import get_degradation_backend
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.demonstrators import make_demonstrations
from s3rr.services.environments.rollouts import collect_rollouts
from s3rr.services.evaluation.reports import correlation_report, policy_report
from s3rr.services.evaluation.test_split import generate_test_split
from s3rr.services.policies.mixture import UniformPolicy
from s3rr.services.reward_models import ApproximatorReward
from s3rr.services.reward_regression.regression import reward_regression
from s3rr.services.reward_regression.sigmoid_fit import SigmoidFit, fit_degradation_curve
from s3rr.services.rl.reinforce import train_policy
from s3rr.services.serialization import (
    file_digest,
    load_dataset,
    load_policy,
    load_reward_model,
    manifest_path,
    read_json,
    save_dataset,
    save_policy,
    save_reward_model,
    write_csv,
    write_json,
)


logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
MANIFEST_FILE = "run_manifest.json"
LOCK_FILE = ".lock"

DEMOS = "demos.jsonl"
AIRL_REWARD = "airl_reward.json"
AIRL_POLICY = "airl_policy.json"
AIRL_LOG = "airl_log.csv"
AIRL_SUMMARY = "airl_summary.json"
DEGRADATION = "degradation.jsonl"
DEGRADATION_RUNS = "degradation_runs.csv"
SIGMOID = "sigmoid.json"
REWARD_MODEL = "reward_model.json"
REWARD_LOSS = "reward_loss.csv"
POLICY = "policy.json"
POLICY_CURVE = "policy_curve.csv"
TEST = "test.jsonl"
EVAL_SCATTER = "eval_scatter.csv"
EVAL_SUMMARY = "eval_summary.json"


class RunLock:
    """Exclusive ``<out_dir>/.lock`` held for the duration of a run."""

    def __init__(self, out_dir: Path) -> None:
        self.path = out_dir / LOCK_FILE

    def __enter__(self) -> "RunLock":
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as e:
            raise RunLockedError(str(self.path)) from e
        with os.fdopen(fd, "w") as handle:
            handle.write(f"{os.getpid()}\n")
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc: BaseException | None,
        traceback: TracebackType | None,
    ) -> None:
        self.path.unlink(missing_ok=True)


class PipelineRunner:
    def __init__(self, config: PipelineConfig, out_dir: str | Path) -> None:
        self.config = config
        self.out_dir = Path(out_dir)
        self._env: BaseEnvironment | None = None
        self._warnings: list[str] = []
        self._stages: dict[Stage, Callable[[], list[str]]] = {
            Stage.DEMOS: self.run_demos,
            Stage.AIRL: self.run_airl,
            Stage.DEGRADE: self.run_degrade,
            Stage.FIT: self.run_fit,
            Stage.REWARD: self.run_reward,
            Stage.POLICY: self.run_policy,
            Stage.EVAL: self.run_eval,
        }

    @property
    def env(self) -> BaseEnvironment:
        if self._env is None:
            self._env = self.config.env.make_env()
        return self._env

    def _path(self, name: str) -> Path:
        return self.out_dir / name

    def _require(self, name: str, stage: Stage) -> Path:
        path = self._path(name)
        if not path.exists():
            raise MissingArtifactError(str(path), stage.value)
        return path

    def _rng(self, stage: Stage):
        return make_rng(derive_seed(self.config.seed, stage.value))

    def _load_manifest(self) -> RunManifest:
        path = self._path(MANIFEST_FILE)
        digest = self.config.digest()
        if path.exists():
            manifest = RunManifest.from_dict(read_json(path))
            if manifest.seed == self.config.seed and manifest.config_digest == digest:
                return manifest
            logger.warning("config or seed changed; starting a fresh manifest in %s", self.out_dir)
        return RunManifest(seed=self.config.seed, config_digest=digest)

    def run(self, stages: Iterable[Stage] = PIPELINE_STAGES) -> RunManifest:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with RunLock(self.out_dir):
            write_json(self._path(CONFIG_FILE), self.config.to_dict())
            manifest = self._load_manifest()
            for stage in stages:
                logger.info("stage %s starting", stage.value)
                self._warnings = []
                outputs = self._stages[stage]()
                digests = {name: file_digest(self._path(name)) for name in outputs}
                manifest = manifest.with_stage(stage.value, digests, self._warnings)
                write_json(self._path(MANIFEST_FILE), manifest.to_dict())
                logger.info("stage %s wrote %s", stage.value, ", ".join(sorted(outputs)))
        return manifest

    def _dataset_outputs(self, name: str) -> list[str]:
        return [name, manifest_path(self._path(name)).name]

    def run_demos(self) -> list[str]:
        rng = self._rng(Stage.DEMOS)
        demo_spec = self.config.env.demonstrator_spec(self.env)
        demos = make_demonstrations(self.env, demo_spec, self.config.env.n_demos, rng, self._warnings)
        dataset = DegradationDataset.from_trajectories(
            self.env.id,
            demos,
            Provenance.DEMO,
            seed=derive_seed(self.config.seed, Stage.DEMOS.value),
            metadata={"demonstrator": demo_spec.kind.value},
        )
        save_dataset(dataset, self._path(DEMOS))
        return self._dataset_outputs(DEMOS)

    def _demos(self, stage: Stage) -> DegradationDataset:
        return load_dataset(self._require(DEMOS, stage))

    def _heldout_accuracy(self, reward_model: ApproximatorReward, rng: np.random.Generator) -> float:
        demonstrator = self.env.build_demonstrator(self.config.env.demonstrator_spec(self.env))
        n = self.config.env.n_demos
        fresh = collect_rollouts(self.env, demonstrator, n, draw_seed(rng))
        random = collect_rollouts(self.env, UniformPolicy(self.env.spec.action_space), n, draw_seed(rng))
        return heldout_accuracy(fresh, random, reward_model)

    def run_airl(self) -> list[str]:
        demos = self._demos(Stage.AIRL)
        rng = self._rng(Stage.AIRL)
        result = train_airl(self.env, demos.trajectories, self.config.airl, rng)
        save_reward_model(result.reward_model, self._path(AIRL_REWARD))
        save_policy(result.policy, self._path(AIRL_POLICY))
        write_csv(
            self._path(AIRL_LOG),
            (vars(row) for row in result.log),
            ("iteration", "bce", "accuracy", "policy_gt_return"),
        )
        accuracy = self._heldout_accuracy(result.reward_model, rng)
        logger.info("AIRL held-out demo-vs-random accuracy %.3f", accuracy)
        write_json(
            self._path(AIRL_SUMMARY),
            {"demos_used": result.demos_used, "heldout_accuracy": accuracy},
        )
        return [AIRL_REWARD, AIRL_POLICY, AIRL_LOG, AIRL_SUMMARY]

    def run_degrade(self) -> list[str]:
        demos = self._demos(Stage.DEGRADE)
        plan = self.config.degradation.plan()
        airl_result = None
        if plan.method == DegradationMethod.NOISE:
            airl_result = AirlResult(
                reward_model=load_reward_model(self._require(AIRL_REWARD, Stage.DEGRADE)),
                policy=load_policy(self._require(AIRL_POLICY, Stage.DEGRADE)),
                demos_used=len(demos),
            )
        backend = get_degradation_backend(plan, self.config.airl)
        dataset = backend.generate(self.env, demos.trajectories, airl_result, self._rng(Stage.DEGRADE))
        save_dataset(dataset, self._path(DEGRADATION))
        write_csv(
            self._path(DEGRADATION_RUNS),
            dataset.metadata["runs"],
            ("control", "eta", "l1_norm", "mean_gt_return"),
        )
        return [*self._dataset_outputs(DEGRADATION), DEGRADATION_RUNS]

    def run_fit(self) -> list[str]:
        dataset = load_dataset(self._require(DEGRADATION, Stage.FIT))
        fit = fit_degradation_curve(dataset.return_points(), self.config.curvefit)
        self._warnings.extend(fit.warnings)
        write_json(self._path(SIGMOID), fit.to_dict())
        return [SIGMOID]

    def run_reward(self) -> list[str]:
        dataset = load_dataset(self._require(DEGRADATION, Stage.REWARD))
        fit = SigmoidFit.from_dict(read_json(self._require(SIGMOID, Stage.REWARD)))
        result = reward_regression(dataset, fit.params, self.config.reward, self._rng(Stage.REWARD))
        save_reward_model(result.reward_model, self._path(REWARD_MODEL))
        write_csv(
            self._path(REWARD_LOSS),
            (vars(row) for row in result.loss_curve),
            ("epoch", "loss", "step_size"),
        )
        return [REWARD_MODEL, REWARD_LOSS]

    def run_policy(self) -> list[str]:
        reward_model = load_reward_model(self._require(REWARD_MODEL, Stage.POLICY))
        start = None
        if self.config.rl.warm_start:
            start = load_policy(self._require(AIRL_POLICY, Stage.POLICY))
        result = train_policy(
            self.env, reward_model, self.config.rl, self._rng(Stage.POLICY), policy=start, stage="policy"
        )
        save_policy(result.policy, self._path(POLICY))
        write_csv(
            self._path(POLICY_CURVE),
            (vars(row) for row in result.curve),
            ("iteration", "mean_return", "entropy", "l1_norm"),
        )
        return [POLICY, POLICY_CURVE]

    def run_eval(self) -> list[str]:
        demos = self._demos(Stage.EVAL)
        degradation = load_dataset(self._require(DEGRADATION, Stage.EVAL))
        airl_policy = load_policy(self._require(AIRL_POLICY, Stage.EVAL))
        reward_model = load_reward_model(self._require(REWARD_MODEL, Stage.EVAL))
        policy = load_policy(self._require(POLICY, Stage.EVAL))
        rng = self._rng(Stage.EVAL)

        test = generate_test_split(
            self.env, airl_policy, degradation.levels, self.config.eval.test, rng, self.config.rl
        )
        save_dataset(test, self._path(TEST))
        report = correlation_report(
            reward_model,
            {
                Split.DEMO: demos.trajectories,
                Split.DEGRADATION: degradation.trajectories,
                Split.TEST: test.trajectories,
            },
            self.env,
        )
        held_out = correlation_report(
            reward_model,
            {Split.DEGRADATION: degradation.trajectories, Split.TEST: test.trajectories},
            self.env,
        )
        performance = policy_report(policy, demos.trajectories, self.env, self.config.eval.m, rng)
        write_csv(
            self._path(EVAL_SCATTER),
            (point.to_row() for point in report.points),
            ("split", "gt_return", "predicted_return", "normalized_return"),
        )
        write_json(
            self._path(EVAL_SUMMARY),
            {
                "correlation": report.to_dict(),
                "degradation_test_r": held_out.pearson_r,
                "policy": performance.to_dict(),
            },
        )
        return [*self._dataset_outputs(TEST), EVAL_SCATTER, EVAL_SUMMARY]
