from dataclasses import replace
from unittest import TestCase

import numpy as np
import pytest

from example_app.envs import EpsilonArm, TwoArmedBandit
from s3rr.cli import resolve_config_path
from s3rr.constants import DegradationMethod, Provenance
from s3rr.exceptions import ConfigError
from s3rr.pipeline_config import PipelineConfig, load_config
from s3rr.seeding import derive_seed, draw_seed, make_rng
from s3rr.services.airl import AirlConfig, AirlResult, train_airl
from s3rr.services.degradation_backends import (
    DegradationPlan,
    NoiseInjectionBackend,
    SystematicDegradationBackend,
    apply_control,
    eta_from_control,
    eta_grid_noise,
    generate_noise_dataset,
    get_degradation_backend,
    scoring_level,
    train_degradation_runs,
)
from s3rr.services.environments import Reach1D
from s3rr.services.environments.base import BaseEnvironment
from s3rr.services.environments.demonstrators import make_demonstrations
from s3rr.services.environments.rollouts import collect_rollouts, mean_gt_return
from s3rr.services.policies import MixturePolicy, UniformPolicy, build_policy
from s3rr.services.reward_models import build_reward_model


TINY_AIRL = AirlConfig(
    outer_iterations=1,
    disc_steps_per_iter=1,
    policy_iterations_per_iter=1,
    policy_rollouts_per_iter=4,
    disc_hidden_width=4,
    policy_hidden_width=4,
)


class EtaMappingTestCase(TestCase):
    def test_noise_grid(self):
        assert eta_grid_noise(5) == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert len(eta_grid_noise(21)) == 21

    def test_noise_grid_needs_two_levels(self):
        with pytest.raises(ConfigError):
            eta_grid_noise(1)

    def test_demo_count(self):
        etas = eta_from_control(DegradationMethod.DEMO_COUNT, [1, 3, 6, 10])

        np.testing.assert_allclose(etas, [1.0, 7 / 9, 4 / 9, 0.0])

    def test_capacity_fewer_layers_is_more_degraded(self):
        etas = eta_from_control(DegradationMethod.CAPACITY, [1, 2, 3, 4, 5])

        assert etas == [1.0, 0.75, 0.5, 0.25, 0.0]

    def test_sparsity_larger_coefficient_is_more_degraded(self):
        etas = eta_from_control(DegradationMethod.SPARSITY, [100, 10, 1, 0.1, 0.01])

        assert etas == [1.0, 0.75, 0.5, 0.25, 0.0]

    def test_labels_follow_the_given_order(self):
        assert eta_from_control(DegradationMethod.CAPACITY, [3, 1, 2]) == [0.0, 1.0, 0.5]

    def test_duplicate_controls(self):
        with pytest.raises(ConfigError) as excinfo:
            eta_from_control(DegradationMethod.SPARSITY, [1.0, 1.0])
        assert excinfo.value.field_path == "degradation.levels"

    def test_invalid_controls(self):
        with pytest.raises(ConfigError):
            eta_from_control(DegradationMethod.NOISE, [0.0, 1.5])
        with pytest.raises(ConfigError):
            eta_from_control(DegradationMethod.DEMO_COUNT, [0, 2])
        with pytest.raises(ConfigError):
            eta_from_control(DegradationMethod.CAPACITY, [1.5, 2])
        with pytest.raises(ConfigError):
            eta_from_control(DegradationMethod.SPARSITY, [-1.0, 1.0])


class DegradationPlanTestCase(TestCase):
    def test_noise_plan(self):
        plan = DegradationPlan.noise(3, trajectories_per_level=2)

        assert plan.controls == (0.0, 0.5, 1.0)
        assert plan.provenance == Provenance.NOISE
        assert not plan.is_systematic

    def test_plan_validates_controls(self):
        with pytest.raises(ConfigError):
            DegradationPlan(DegradationMethod.CAPACITY, (2.0,))

    def test_plan_needs_trajectories(self):
        with pytest.raises(ConfigError) as excinfo:
            DegradationPlan.noise(3, trajectories_per_level=0)
        assert excinfo.value.field_path == "degradation.trajectories_per_level"

    def test_backend_dispatch(self):
        assert isinstance(get_degradation_backend(DegradationPlan.noise(3)), NoiseInjectionBackend)
        plan = DegradationPlan(DegradationMethod.SPARSITY, (0.0, 1.0))
        assert isinstance(get_degradation_backend(plan), SystematicDegradationBackend)

    def test_apply_control_changes_one_knob(self):
        assert apply_control(TINY_AIRL, DegradationMethod.DEMO_COUNT, 3.0).demo_subset_size == 3
        assert apply_control(TINY_AIRL, DegradationMethod.CAPACITY, 2.0).policy_hidden_layers == 2
        sparse = apply_control(TINY_AIRL, DegradationMethod.SPARSITY, 0.5)
        assert sparse == replace(TINY_AIRL, sparsity_lambda=0.5)

    def test_apply_control_rejects_noise(self):
        with pytest.raises(ConfigError):
            apply_control(TINY_AIRL, DegradationMethod.NOISE, 0.5)


class NoiseInjectionTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, bandit: TwoArmedBandit, rng: np.random.Generator) -> None:
        self.env = bandit
        spec = bandit.spec
        self.airl_result = AirlResult(
            reward_model=build_reward_model(spec.state_space, spec.action_space, 1, 4, rng),
            policy=build_policy(spec.state_space, spec.action_space, 1, 4, rng),
            demos_used=4,
        )

    def test_every_level_gets_scored_trajectories(self):
        dataset = generate_noise_dataset(self.env, self.airl_result, [0.0, 0.5, 1.0], 4, np.random.default_rng(1))

        assert dataset.levels == (0.0, 0.5, 1.0)
        assert len(dataset) == 12
        assert all(len(group) == 4 for group in dataset.by_level().values())
        assert all(t.is_scored for t in dataset.trajectories)
        assert dataset.provenance == Provenance.NOISE

    def test_scores_come_from_the_airl_reward(self):
        dataset = generate_noise_dataset(self.env, self.airl_result, [0.0, 1.0], 2, np.random.default_rng(1))
        trajectory = dataset.trajectories[0]
        expected = self.airl_result.reward_model(trajectory.state_array, trajectory.action_array)

        np.testing.assert_allclose(trajectory.initial_rewards, expected)
        assert dataset.metadata["scoring_model"] == self.airl_result.reward_model.digest()

    def test_metadata_lists_runs(self):
        dataset = generate_noise_dataset(self.env, self.airl_result, [0.0, 1.0], 3, np.random.default_rng(1))
        runs = dataset.metadata["runs"]

        assert [run["eta"] for run in runs] == [0.0, 1.0]
        assert dataset.metadata["trajectories_per_level"] == 3

    def test_same_seed_same_dataset(self):
        first = generate_noise_dataset(self.env, self.airl_result, [0.0, 1.0], 3, np.random.default_rng(9))
        second = generate_noise_dataset(self.env, self.airl_result, [0.0, 1.0], 3, np.random.default_rng(9))

        assert first == second

    def test_needs_an_airl_result(self):
        backend = NoiseInjectionBackend(DegradationPlan.noise(3))

        with pytest.raises(ConfigError):
            backend.generate(self.env, (), None, np.random.default_rng(0))


class SystematicDegradationTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, bandit: TwoArmedBandit, monkeypatch: pytest.MonkeyPatch) -> None:
        self.env = bandit
        self.monkeypatch = monkeypatch
        self.demos = collect_rollouts(bandit, EpsilonArm(0.3), 3, seed=4)
        self.plan = DegradationPlan(DegradationMethod.DEMO_COUNT, (1.0, 2.0, 3.0), trajectories_per_level=2)

    def test_demo_count_dataset(self):
        backend = SystematicDegradationBackend(self.plan, TINY_AIRL)
        dataset = backend.generate(self.env, self.demos, None, np.random.default_rng(0))

        assert dataset.levels == (0.0, 0.5, 1.0)
        assert dataset.provenance == Provenance.DEMO_COUNT
        assert len(dataset) == 6
        assert [run["control"] for run in dataset.metadata["runs"]] == [3.0, 2.0, 1.0]

    def test_runs_follow_control_order(self):
        levels = train_degradation_runs(self.env, self.demos, self.plan, TINY_AIRL, seed=3, workers=1)

        assert [level.control for level in levels] == [1.0, 2.0, 3.0]
        assert [level.result.demos_used for level in levels] == [1, 2, 3]
        assert scoring_level(levels).control == 3.0

    def test_thread_count_does_not_change_runs(self):
        self.monkeypatch.setenv("SRRR_THREADS", "3")
        serial = train_degradation_runs(self.env, self.demos, self.plan, TINY_AIRL, seed=3, workers=1)
        threaded = train_degradation_runs(self.env, self.demos, self.plan, TINY_AIRL, seed=3, workers=3)

        assert [level.result.reward_model.digest() for level in serial] == [
            level.result.reward_model.digest() for level in threaded
        ]

    def test_control_above_demo_count(self):
        plan = DegradationPlan(DegradationMethod.DEMO_COUNT, (1.0, 5.0))

        with pytest.raises(ConfigError) as excinfo:
            train_degradation_runs(self.env, self.demos, plan, TINY_AIRL, seed=3, workers=1)
        assert excinfo.value.field_path == "airl.demo_subset_size"

    def test_rejects_noise_plan(self):
        with pytest.raises(ConfigError):
            SystematicDegradationBackend(DegradationPlan.noise(3), TINY_AIRL)


def unscored(trajectories) -> list[tuple]:
    return [(t.states, t.actions, t.gt_return) for t in trajectories]


def test_noise_extremes_reproduce_the_pure_policies(reach1d: Reach1D, rng: np.random.Generator):
    spec = reach1d.spec
    airl_result = AirlResult(
        reward_model=build_reward_model(spec.state_space, spec.action_space, 1, 4, rng),
        policy=build_policy(spec.state_space, spec.action_space, 1, 4, rng),
        demos_used=1,
    )
    dataset = generate_noise_dataset(reach1d, airl_result, [0.0, 0.5, 1.0], 3, np.random.default_rng(9))
    seed = draw_seed(np.random.default_rng(9))
    by_level = dataset.by_level()

    clean = collect_rollouts(reach1d, airl_result.policy, 3, derive_seed(seed, "level", 0))
    uniform_policy = UniformPolicy(spec.action_space)
    uniform = collect_rollouts(reach1d, uniform_policy, 3, derive_seed(seed, "level", 2), eta=1.0)
    assert unscored(by_level[0.0]) == unscored(clean)
    assert unscored(by_level[1.0]) == unscored(uniform)


def bundled(name: str) -> PipelineConfig:
    return load_config(resolve_config_path(name))


def seeded_demos(env: BaseEnvironment, config: PipelineConfig, seed: int) -> list:
    demo_spec = config.env.demonstrator_spec(env)
    return make_demonstrations(env, demo_spec, config.env.n_demos, make_rng(derive_seed(seed, "demos")), [])


def trained_airl(env: BaseEnvironment, demos: list, airl_config: AirlConfig, seed: int) -> AirlResult:
    # every arm of a comparison shares the seed, so only the knob differs between them
    return train_airl(env, demos, airl_config, make_rng(derive_seed(seed, "airl")))


def policy_return(env: BaseEnvironment, result: AirlResult, seed: int, n: int = 50) -> float:
    return mean_gt_return(collect_rollouts(env, result.policy, n, derive_seed(seed, "evaluate")))


@pytest.mark.slow
def test_noise_levels_degrade_ground_truth_return():
    config = bundled("reach1d-noise")
    env = config.env.make_env()
    etas = [0.0, 0.25, 0.5, 0.75, 1.0]
    monotone_seeds = 0
    for seed in range(5):
        result = trained_airl(env, seeded_demos(env, config, seed), config.airl, seed)
        means, errors = [], []
        for index, eta in enumerate(etas):
            mixture = MixturePolicy(result.policy, eta)
            rollouts = collect_rollouts(env, mixture, 50, derive_seed(seed, "eta", index))
            returns = np.array([t.gt_return for t in rollouts])
            means.append(returns.mean())
            errors.append(returns.std(ddof=1) / np.sqrt(returns.size))
        monotone_seeds += all(
            means[i + 1] <= means[i] + np.hypot(errors[i], errors[i + 1]) for i in range(len(etas) - 1)
        )

    assert monotone_seeds >= 4


@pytest.mark.slow
def test_more_demonstrations_train_a_better_policy():
    config = bundled("reach1d-democount")
    env = config.env.make_env()
    margins = []
    for seed in range(5):
        demos = seeded_demos(env, config, seed)
        many = trained_airl(env, demos, apply_control(config.airl, DegradationMethod.DEMO_COUNT, 10), seed)
        one = trained_airl(env, demos, apply_control(config.airl, DegradationMethod.DEMO_COUNT, 1), seed)
        margins.append(policy_return(env, many, seed) - policy_return(env, one, seed))

    assert np.median(margins) > 0.0


@pytest.mark.slow
def test_deeper_networks_train_a_better_policy():
    config = bundled("reach1d-capacity")
    env = config.env.make_env()
    margins = []
    for seed in range(5):
        demos = seeded_demos(env, config, seed)
        deep = trained_airl(env, demos, apply_control(config.airl, DegradationMethod.CAPACITY, 5), seed)
        shallow = trained_airl(env, demos, apply_control(config.airl, DegradationMethod.CAPACITY, 1), seed)
        margins.append(policy_return(env, deep, seed) - policy_return(env, shallow, seed))

    assert np.median(margins) > 0.0


@pytest.mark.slow
def test_policy_norm_shrinks_with_the_sparsity_coefficient():
    config = bundled("reach1d-sparsity")
    env = config.env.make_env()
    lambdas = [0.01, 0.1, 1.0]
    norms = {value: [] for value in lambdas}
    for seed in range(5):
        demos = seeded_demos(env, config, seed)
        for value in lambdas:
            sparse = apply_control(config.airl, DegradationMethod.SPARSITY, value)
            result = trained_airl(env, demos, sparse, seed)
            norms[value].append(result.policy.l1_norm())

    medians = [np.median(norms[value]) for value in lambdas]
    assert medians[0] >= medians[1] >= medians[2]
