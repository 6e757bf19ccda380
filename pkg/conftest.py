import numpy as np
import pytest

from example_app.envs import TwoArmedBandit
from s3rr.services.environments import Grid5, Reach1D


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture()
def bandit() -> TwoArmedBandit:
    return TwoArmedBandit()


@pytest.fixture()
def reach1d() -> Reach1D:
    return Reach1D(horizon=10)


@pytest.fixture()
def grid5() -> Grid5:
    return Grid5()


@pytest.fixture()
def single_thread(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("SRRR_THREADS", "1")


@pytest.fixture()
def tiny_config() -> dict:
    """A full reach1d noise-injection run that finishes in seconds."""
    return {
        "seed": 7,
        "env": {"id": "reach1d", "n_demos": 4, "options": {"horizon": 10}},
        "airl": {
            "outer_iterations": 2,
            "disc_steps_per_iter": 2,
            "policy_iterations_per_iter": 2,
            "policy_rollouts_per_iter": 4,
            "disc_hidden_width": 4,
            "policy_hidden_width": 4,
        },
        "degradation": {"method": "noise", "n_levels": 6, "trajectories_per_level": 3},
        "curvefit": {"n_starts": 4},
        "reward": {"epochs": 5, "batch_size": 8, "hidden_width": 4},
        "rl": {"iterations": 3, "rollouts_per_iter": 4, "hidden_width": 4},
        "eval": {"m": 5, "test": {"per_level": 2, "snapshots": 1, "snapshot_iterations": 2}},
    }
