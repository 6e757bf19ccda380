from unittest import TestCase

import numpy as np
import pytest
from scipy.stats import ttest_rel

from example_app.envs import TwoArmedBandit
from s3rr.constants import BaselineKind
from s3rr.exceptions import DivergenceError, RolloutError
from s3rr.services.dataclasses import Trajectory
from s3rr.services.environments import Reach1D
from s3rr.services.policies import build_policy
from s3rr.services.reward_models import GroundTruthReward
from s3rr.services.rl import RLConfig, policy_gradient_estimate, train_policy
from s3rr.services.rl.reinforce import _assemble, _leave_one_out_baseline


def zero_reward(states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return np.zeros(len(states))


def arm_probability(policy, arm: int = 0) -> float:
    return float(policy.probabilities(np.array([0.0]))[arm])


def arm_distribution(policy) -> np.ndarray:
    return np.asarray(policy.probabilities(np.array([0.0])), dtype=float)


class RLConfigTestCase(TestCase):
    def test_defaults_are_valid(self):
        config = RLConfig()

        assert config.baseline == BaselineKind.MEAN_RETURN
        assert config.alpha is None

    def test_rejects_negative_entropy_weight(self):
        with pytest.raises(ValueError):
            RLConfig(alpha=-1.0)

    def test_rejects_negative_sparsity(self):
        with pytest.raises(ValueError):
            RLConfig(sparsity_lambda=-0.1)

    def test_rejects_zero_iterations(self):
        with pytest.raises(ValueError):
            RLConfig(iterations=0)


class PolicyGradientTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, bandit: TwoArmedBandit, rng: np.random.Generator) -> None:
        self.env = bandit
        self.rng = rng
        self.policy = build_policy(bandit.spec.state_space, bandit.spec.action_space, 1, 4, rng)
        self.reward = GroundTruthReward(bandit)

    def pull(self, arm: int) -> Trajectory:
        return Trajectory.from_arrays(0.0, [[0.0]], [[float(arm)]], gt_return=float(arm == 0))

    def test_empty_batch_raises(self):
        with pytest.raises(RolloutError):
            policy_gradient_estimate([], self.policy, self.reward, RLConfig(), 1.0, 0.0)

    def test_leave_one_out_baseline(self):
        batch = _assemble([self.pull(0), self.pull(1), self.pull(1)], self.policy, self.reward, 1.0, 0.0)

        np.testing.assert_allclose(_leave_one_out_baseline(batch), [0.0, 0.5, 0.5])

    def test_single_trajectory_has_zero_baseline(self):
        batch = _assemble([self.pull(0)], self.policy, self.reward, 1.0, 0.0)

        np.testing.assert_array_equal(_leave_one_out_baseline(batch), [0.0])

    def test_identical_returns_give_zero_gradient(self):
        grad = policy_gradient_estimate(
            [self.pull(0), self.pull(0)], self.policy, self.reward, RLConfig(), 1.0, 0.0
        )

        np.testing.assert_allclose(grad, 0.0, atol=1e-12)

    def test_gradient_favours_the_paying_arm(self):
        grad = policy_gradient_estimate(
            [self.pull(0), self.pull(1)], self.policy, self.reward, RLConfig(), 1.0, 0.0
        )
        stepped = self.policy.with_flat_params(self.policy.flat_params + 0.1 * grad)

        assert arm_probability(stepped) > arm_probability(self.policy)

    def test_sparsity_term_is_subtracted(self):
        config = RLConfig(sparsity_lambda=0.5)
        grad = policy_gradient_estimate(
            [self.pull(0), self.pull(0)], self.policy, self.reward, config, 1.0, 0.0
        )

        np.testing.assert_allclose(grad, -0.5 * self.policy.l1_subgradient(), atol=1e-12)

    def test_estimate_is_unbiased_against_enumeration(self):
        probabilities = arm_distribution(self.policy)
        exact = self.policy.grad_log_density(
            np.zeros((2, 1)), np.array([[0.0], [1.0]]), probabilities * np.array([1.0, 0.0])
        )
        rng = np.random.default_rng(11)
        estimates = []
        for _ in range(1000):
            arms = rng.choice(2, size=8, p=probabilities)
            batch = [self.pull(int(arm)) for arm in arms]
            estimates.append(policy_gradient_estimate(batch, self.policy, self.reward, RLConfig(), 1.0, 0.0))

        bias = np.linalg.norm(np.mean(estimates, axis=0) - exact)
        assert bias <= 0.05 * np.linalg.norm(exact)

    def test_entropy_bonus_moves_toward_uniform(self):
        skewed = self.policy.with_flat_params(self.policy.flat_params * 5.0)
        grad = policy_gradient_estimate([self.pull(0), self.pull(0)], skewed, zero_reward, RLConfig(), 1.0, 1.0)
        stepped = skewed.with_flat_params(skewed.flat_params + 1e-3 * grad)

        assert stepped.entropy(np.array([0.0])) > skewed.entropy(np.array([0.0]))


class TrainPolicyTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, bandit: TwoArmedBandit, rng: np.random.Generator) -> None:
        self.env = bandit
        self.rng = rng

    def test_learns_the_paying_arm(self):
        config = RLConfig(iterations=60, rollouts_per_iter=16, step_size=0.1, hidden_width=4)
        result = train_policy(self.env, GroundTruthReward(self.env), config, self.rng)

        assert arm_probability(result.policy) > 0.8
        assert len(result.curve) == 60
        early = np.mean([row.mean_return for row in result.curve[:5]])
        late = np.mean([row.mean_return for row in result.curve[-5:]])
        assert late > early

    def test_learned_value_baseline_trains(self):
        config = RLConfig(
            iterations=30, rollouts_per_iter=8, step_size=0.1, baseline=BaselineKind.LEARNED_VALUE
        )
        result = train_policy(self.env, GroundTruthReward(self.env), config, self.rng)

        assert all(np.isfinite(row.mean_return) for row in result.curve)
        assert arm_probability(result.policy) > 0.5

    def test_sparsity_shrinks_the_network(self):
        config = RLConfig(iterations=30, rollouts_per_iter=4, step_size=0.01, sparsity_lambda=1.0)
        result = train_policy(self.env, zero_reward, config, self.rng)

        assert result.curve[-1].l1_norm < result.curve[0].l1_norm

    def test_same_seed_same_policy(self):
        config = RLConfig(iterations=5, rollouts_per_iter=4)
        first = train_policy(self.env, GroundTruthReward(self.env), config, np.random.default_rng(3))
        second = train_policy(self.env, GroundTruthReward(self.env), config, np.random.default_rng(3))

        np.testing.assert_array_equal(first.policy.flat_params, second.policy.flat_params)

    def test_non_finite_reward_diverges(self):
        def broken(states, actions):
            return np.full(len(states), np.nan)

        with pytest.raises(DivergenceError) as excinfo:
            train_policy(self.env, broken, RLConfig(iterations=3), self.rng, stage="policy")
        assert excinfo.value.stage == "policy"
        assert excinfo.value.iteration == 0

    def test_strong_entropy_bonus_keeps_the_policy_near_uniform(self):
        env = TwoArmedBandit(alpha=10.0)
        config = RLConfig(iterations=400, rollouts_per_iter=16, step_size=0.01, hidden_width=4)
        result = train_policy(env, GroundTruthReward(env), config, self.rng)
        total_variation = 0.5 * np.abs(arm_distribution(result.policy) - 0.5).sum()

        # the soft-optimal policy e^{r/α} sits 0.025 from uniform
        assert total_variation <= 0.05

    def test_without_entropy_the_paying_arm_dominates(self):
        config = RLConfig(iterations=300, rollouts_per_iter=16, step_size=0.1, hidden_width=4)
        result = train_policy(self.env, GroundTruthReward(self.env), config, self.rng)

        assert arm_probability(result.policy) >= 0.95

    def test_huge_sparsity_coefficient_empties_the_network(self):
        config = RLConfig(
            iterations=500, rollouts_per_iter=1, step_size=5e-3, sparsity_lambda=1e3, hidden_width=4
        )
        result = train_policy(self.env, zero_reward, config, self.rng)

        assert result.policy.l1_norm() <= 0.01 * result.curve[0].l1_norm

    def test_warm_start_continues_from_given_policy(self):
        policy = build_policy(self.env.spec.state_space, self.env.spec.action_space, 1, 8, self.rng)
        result = train_policy(self.env, zero_reward, RLConfig(iterations=1), self.rng, policy=policy)

        assert result.policy.flat_params.size == policy.flat_params.size


def test_reach1d_returns_improve_over_training(reach1d: Reach1D):
    config = RLConfig(iterations=60, rollouts_per_iter=16, step_size=0.05, hidden_width=8, log_every=0)
    first, last = [], []
    for seed in range(5):
        curve = train_policy(reach1d, GroundTruthReward(reach1d), config, np.random.default_rng(seed)).curve
        returns = [row.mean_return for row in curve]
        first.append(np.mean(returns[:6]))
        last.append(np.mean(returns[-6:]))

    assert ttest_rel(last, first, alternative="greater").pvalue < 0.05
