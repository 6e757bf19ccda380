from collections.abc import Sequence

import numpy as np

from s3rr.constants import DegradationMethod
from s3rr.exceptions import ConfigError


LEVELS_FIELD = "degradation.levels"


def eta_grid_noise(n_levels: int) -> list[float]:
    """``n_levels`` noise levels equally spaced over [0, 1], ascending."""
    if n_levels < 2:
        raise ConfigError(f"at least 2 noise levels are required, got {n_levels}", LEVELS_FIELD)
    return [i / (n_levels - 1) for i in range(n_levels)]


def _check_controls(controls: Sequence[float]) -> None:
    if len(controls) < 2:
        raise ConfigError(f"at least 2 controls are required, got {len(controls)}", LEVELS_FIELD)
    if len(set(controls)) != len(controls):
        raise ConfigError(f"duplicate controls in {list(controls)}", LEVELS_FIELD)


def _rank_etas(controls: Sequence[float], larger_is_more_degraded: bool) -> list[float]:
    # equally spaced η from 1.0 down to 0.0 along the degradation order
    m = len(controls)
    ranks = np.empty(m, dtype=int)
    ranks[np.argsort(np.asarray(controls, dtype=float), kind="stable")] = np.arange(m)
    if not larger_is_more_degraded:
        ranks = m - 1 - ranks
    return [float(rank) / (m - 1) for rank in ranks]


def eta_from_control(method: DegradationMethod, controls: Sequence[float]) -> list[float]:
    """η label per control value, in the order the controls were given.

    * noise: the controls already are η values.
    * demo_count: ``η = (max - n) / (max - min)``, fewer demonstrations is more degraded.
    * capacity: fewer hidden layers is more degraded.
    * sparsity: a larger L1 coefficient is more degraded.
    """
    _check_controls(controls)
    if method == DegradationMethod.NOISE:
        if any(not 0.0 <= c <= 1.0 for c in controls):
            raise ConfigError(f"noise levels must lie in [0, 1], got {list(controls)}", LEVELS_FIELD)
        return [float(c) for c in controls]
    if method == DegradationMethod.DEMO_COUNT:
        if any(c < 1 or c != int(c) for c in controls):
            raise ConfigError(f"demo counts must be positive integers, got {list(controls)}", LEVELS_FIELD)
        high, low = max(controls), min(controls)
        return [(high - c) / (high - low) for c in controls]
    if method == DegradationMethod.CAPACITY:
        if any(c < 1 or c != int(c) for c in controls):
            raise ConfigError(f"layer counts must be positive integers, got {list(controls)}", LEVELS_FIELD)
        return _rank_etas(controls, larger_is_more_degraded=False)
    if method == DegradationMethod.SPARSITY:
        if any(c < 0 for c in controls):
            raise ConfigError(f"L1 coefficients must be >= 0, got {list(controls)}", LEVELS_FIELD)
        return _rank_etas(controls, larger_is_more_degraded=True)
    raise ConfigError(f"unknown degradation method {method!r}", "degradation.method")
