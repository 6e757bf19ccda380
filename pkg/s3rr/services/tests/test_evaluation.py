from unittest import TestCase

import numpy as np
import pytest

from example_app.envs import EpsilonArm, FixedArm, TwoArmedBandit
from s3rr.constants import Provenance, Split
from s3rr.exceptions import DegenerateRangeError, MissingGroundTruthError, UndefinedCorrelationError
from s3rr.services.dataclasses import Trajectory
from s3rr.services.environments import Reach1D
from s3rr.services.environments.demonstrators import ProportionalController
from s3rr.services.environments.rollouts import collect_rollouts
from s3rr.services.evaluation import (
    TestSplitConfig,
    correlation_report,
    discounted_return,
    generate_test_split,
    normalize_to_range,
    off_grid_etas,
    pearson,
    policy_report,
    summarize_trials,
)
from s3rr.services.policies import UniformPolicy, build_policy
from s3rr.services.reward_models import GroundTruthReward
from s3rr.services.rl import RLConfig


class MetricsTestCase(TestCase):
    def test_pearson_of_a_linear_relation(self):
        assert pearson([1.0, 2.0, 3.0], [2.0, 4.0, 6.0]) == pytest.approx(1.0)
        assert pearson([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) == pytest.approx(-1.0)

    def test_pearson_of_a_hand_computed_case(self):
        # covariance 5.5 over sqrt(5 * 8.75), 0.8 to one decimal
        r = pearson([1.0, 2.0, 3.0, 4.0], [1.0, 3.0, 2.0, 5.0])

        assert r == pytest.approx(5.5 / np.sqrt(43.75), abs=1e-12)
        assert round(r, 1) == 0.8

    def test_pearson_under_affine_maps(self):
        rng = np.random.default_rng(6)
        xs, ys = rng.normal(size=30), rng.normal(size=30)
        r = pearson(xs, ys)
        for scale, shift in [(0.5, 3.0), (7.0, -2.0), (1e-3, 100.0)]:
            assert pearson(scale * xs + shift, ys) == pytest.approx(r, abs=1e-12)
            assert pearson(xs, scale * ys + shift) == pytest.approx(r, abs=1e-12)
            assert pearson(-scale * xs + shift, ys) == pytest.approx(-r, abs=1e-12)

    def test_pearson_is_undefined_without_variance(self):
        with pytest.raises(UndefinedCorrelationError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
        with pytest.raises(UndefinedCorrelationError):
            pearson([1.0], [2.0])

    def test_pearson_needs_equal_lengths(self):
        with pytest.raises(ValueError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_normalize_to_range(self):
        scaled = normalize_to_range([2.0, 4.0, 3.0], -1.0, 1.0)

        np.testing.assert_allclose(scaled, [-1.0, 1.0, 0.0])

    def test_normalize_pins_the_endpoints(self):
        scaled = normalize_to_range([0.1, 0.7, 0.3], -3.3, 7.9)

        assert scaled[0] == -3.3
        assert scaled[1] == 7.9

    def test_normalize_rejects_degenerate_ranges(self):
        with pytest.raises(DegenerateRangeError):
            normalize_to_range([1.0, 1.0], 0.0, 1.0)
        with pytest.raises(DegenerateRangeError):
            normalize_to_range([1.0, 2.0], 1.0, 1.0)

    def test_summarize_trials_uses_population_std(self):
        summary = summarize_trials([1.0, 2.0, 3.0, 10.0])

        assert summary.n == 4
        assert summary.median == 2.5
        assert summary.mean == 4.0
        assert summary.std == pytest.approx(np.sqrt(12.5))
        assert summary.to_dict()["n"] == 4

    def test_summarize_nothing(self):
        with pytest.raises(ValueError):
            summarize_trials([])


class CorrelationReportTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, reach1d: Reach1D) -> None:
        self.env = reach1d
        self.demos = collect_rollouts(reach1d, ProportionalController(goal=1.0, gain=2.0, noise=0.3), 5, seed=1)
        self.degraded = collect_rollouts(reach1d, UniformPolicy(reach1d.spec.action_space), 5, seed=2, eta=1.0)

    def test_discounted_return_matches_ground_truth(self):
        trajectory = self.demos[0]

        assert discounted_return(GroundTruthReward(self.env), trajectory, self.env.spec.gamma) == pytest.approx(
            trajectory.gt_return
        )

    def test_ground_truth_reward_correlates_perfectly(self):
        report = correlation_report(
            GroundTruthReward(self.env), {Split.DEMO: self.demos, Split.DEGRADATION: self.degraded}, self.env
        )

        assert report.pearson_r == pytest.approx(1.0)
        assert report.n == 10
        assert report.per_split_r["demo"] == pytest.approx(1.0)
        assert "test" not in report.per_split_r

    def test_normalized_predictions_span_the_ground_truth_range(self):
        def shifted(states, actions):
            return 3.0 * GroundTruthReward(self.env)(states, actions) + 7.0

        report = correlation_report(shifted, {Split.DEGRADATION: self.demos + self.degraded}, self.env)
        gt = [point.gt_return for point in report.points]
        normalized = [point.normalized_return for point in report.points]

        assert min(normalized) == min(gt)
        assert max(normalized) == max(gt)
        assert report.points[0].to_row()["split"] == "degradation"

    def test_missing_ground_truth(self):
        unlabelled = Trajectory.from_arrays(0.0, [[0.0]], [[0.0]])

        with pytest.raises(MissingGroundTruthError):
            correlation_report(GroundTruthReward(self.env), {Split.TEST: [unlabelled]}, self.env)


class PolicyReportTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, bandit: TwoArmedBandit, rng: np.random.Generator) -> None:
        self.env = bandit
        self.rng = rng
        self.demos = [
            Trajectory.from_arrays(0.0, [[0.0]], [[0.0]], gt_return=1.0),
            Trajectory.from_arrays(0.0, [[0.0]], [[1.0]], gt_return=0.0),
        ]

    def test_percentages_are_anchored_at_random(self):
        report = policy_report(FixedArm(0), self.demos, self.env, 41, self.rng)
        random_mean = report.random_mean

        assert report.policy_mean == 1.0
        assert report.demo_mean == 0.5
        assert report.demo_best == 1.0
        assert 0.0 < random_mean < 1.0
        assert report.percent_of_best == pytest.approx(100.0)
        assert report.percent_of_demo_mean == pytest.approx(100.0 * (1.0 - random_mean) / (0.5 - random_mean))
        assert report.raw_percent_of_best == pytest.approx(100.0)

    def test_worst_arm_scores_zero_raw(self):
        report = policy_report(FixedArm(1), self.demos, self.env, 41, self.rng)

        assert report.raw_percent_of_best == 0.0
        assert report.percent_of_best <= 0.0

    def test_demonstrations_need_ground_truth(self):
        with pytest.raises(MissingGroundTruthError):
            policy_report(FixedArm(0), [Trajectory.from_arrays(0.0, [[0.0]], [[0.0]])], self.env, 5, self.rng)

    def test_needs_rollouts(self):
        with pytest.raises(ValueError):
            policy_report(FixedArm(0), self.demos, self.env, 0, self.rng)

    def test_report_to_dict(self):
        report = policy_report(EpsilonArm(0.2), self.demos, self.env, 5, self.rng)

        assert report.to_dict()["m"] == 5


class TestSplitTestCase(TestCase):
    @pytest.fixture(autouse=True)
    def setup_fixture(self, bandit: TwoArmedBandit, rng: np.random.Generator) -> None:
        self.env = bandit
        self.rng = rng
        self.policy = build_policy(bandit.spec.state_space, bandit.spec.action_space, 1, 4, rng)

    def test_off_grid_etas_are_midpoints(self):
        assert off_grid_etas([1.0, 0.0, 0.5]) == [0.25, 0.75]
        assert off_grid_etas([0.3]) == []

    def test_split_holds_unseen_levels(self):
        config = TestSplitConfig(per_level=2, snapshots=2, snapshot_iterations=2)
        dataset = generate_test_split(
            self.env, self.policy, [0.0, 0.5, 1.0], config, self.rng, RLConfig(rollouts_per_iter=4)
        )

        np.testing.assert_allclose(dataset.levels, [0.25, 1 / 3, 2 / 3, 0.75])
        assert len(dataset) == 8
        assert dataset.provenance == Provenance.TEST
        assert all(t.gt_return is not None for t in dataset.trajectories)

    def test_no_snapshots(self):
        config = TestSplitConfig(per_level=3, snapshots=0)
        dataset = generate_test_split(self.env, self.policy, [0.0, 0.5, 1.0], config, self.rng)

        assert len(dataset) == 6

    def test_same_seed_same_split(self):
        config = TestSplitConfig(per_level=2, snapshots=1, snapshot_iterations=1)
        first = generate_test_split(self.env, self.policy, [0.0, 1.0], config, np.random.default_rng(4))
        second = generate_test_split(self.env, self.policy, [0.0, 1.0], config, np.random.default_rng(4))

        assert first == second

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TestSplitConfig(per_level=0)
