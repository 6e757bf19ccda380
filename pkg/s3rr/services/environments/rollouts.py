import logging
from concurrent.futures import ThreadPoolExecutor
from typing import TYPE_CHECKING

import numpy as np

from s3rr.app_settings import S3RRSettings
from s3rr.exceptions import RolloutError
from s3rr.seeding import derive_seed, make_rng
from s3rr.services.dataclasses import Trajectory


if TYPE_CHECKING:
    from s3rr.services.environments.base import ActionSource, BaseEnvironment


logger = logging.getLogger(__name__)


def rollout(
    env: "BaseEnvironment",
    policy: "ActionSource",
    rng: np.random.Generator,
    eta: float = 0.0,
) -> Trajectory:
    """One episode; ``gt_return`` is the discounted ground-truth return and
    ``initial_rewards`` stay empty until a reward model scores the trajectory.
    """
    state = env.reset(rng)
    states: list[np.ndarray] = []
    actions: list[np.ndarray] = []
    gt_return = 0.0
    discount = 1.0
    done = False
    while not done:
        vector = state.array
        action = np.asarray(policy.draw(vector, rng), dtype=float).reshape(-1)
        if not np.all(np.isfinite(action)):
            raise RolloutError(f"{env.id}: policy emitted a non-finite action at step {state.step_index}")
        state, gt_reward, done = env.step(state, action)
        states.append(vector)
        actions.append(action)
        gt_return += discount * gt_reward
        discount *= env.spec.gamma
    return Trajectory.from_arrays(eta, states, actions, (), gt_return)


def collect_rollouts(
    env: "BaseEnvironment",
    policy: "ActionSource",
    n: int,
    seed: int,
    eta: float = 0.0,
    workers: int | None = None,
) -> list[Trajectory]:
    """``n`` rollouts, rollout ``i`` seeded by ``derive_seed(seed, "rollout", i)``.

    Results come back in index order, so they do not depend on ``workers``.
    """
    workers = S3RRSettings.from_environ().get_workers(workers)

    def run(index: int) -> Trajectory:
        return rollout(env, policy, make_rng(derive_seed(seed, "rollout", index)), eta=eta)

    if workers <= 1 or n <= 1:
        return [run(index) for index in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, range(n)))


def mean_gt_return(trajectories: list[Trajectory]) -> float:
    returns = [t.gt_return for t in trajectories if t.gt_return is not None]
    if not returns:
        raise RolloutError("no trajectories with a ground-truth return")
    return float(np.mean(returns))
