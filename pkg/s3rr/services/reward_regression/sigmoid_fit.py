"""Degradation-performance curve ``σ(η) = c / (1 + exp(-k (η - x0))) + y0``.

Fitted by bounded trust-region least squares from a fixed set of starts on
standardized returns; the standardization is folded back into ``c`` and ``y0``.
"""

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import least_squares
from scipy.special import expit

from s3rr.app_settings import S3RRSettings
from s3rr.constants import MIN_WELL_CONDITIONED_LEVELS
from s3rr.exceptions import SigmoidFitError
from s3rr.services.dataclasses import SigmoidParams


logger = logging.getLogger(__name__)

START_STEEPNESS = 8.0
START_SCALES = (1.0, 2.0)


@dataclass(frozen=True)
class FitConfig:
    max_iterations: int = 2000
    tolerance: float = 1e-12
    n_starts: int = 16
    k_bound: float = 100.0

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1 or self.n_starts < 1:
            raise ValueError("max_iterations and n_starts must be >= 1")
        if self.k_bound <= 0:
            raise ValueError(f"k_bound must be > 0, got {self.k_bound}")


@dataclass(frozen=True)
class SigmoidFit:
    params: SigmoidParams
    residual: float
    mean: float
    std: float
    n_points: int
    n_levels: int
    start_index: int | None
    warnings: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict[str, Any]:
        return {
            "c": self.params.c,
            "k": self.params.k,
            "x0": self.params.x0,
            "y0": self.params.y0,
            "residual": self.residual,
            "normalization": {"mean": self.mean, "std": self.std},
            "n_points": self.n_points,
            "n_levels": self.n_levels,
            "start_index": self.start_index,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SigmoidFit":
        return cls(
            params=SigmoidParams(
                c=float(data["c"]), k=float(data["k"]), x0=float(data["x0"]), y0=float(data["y0"])
            ),
            residual=float(data["residual"]),
            mean=float(data["normalization"]["mean"]),
            std=float(data["normalization"]["std"]),
            n_points=int(data["n_points"]),
            n_levels=int(data["n_levels"]),
            start_index=data.get("start_index"),
            warnings=tuple(data.get("warnings", ())),
        )


def sigmoid_eval(params: SigmoidParams, eta: float | np.ndarray) -> float | np.ndarray:
    value = params.c * expit(params.k * (np.asarray(eta, dtype=float) - params.x0)) + params.y0
    return float(value) if np.ndim(value) == 0 else value


def _residuals(p: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    c, k, x0, y0 = p
    return c * expit(k * (x - x0)) + y0 - y


def _jacobian(p: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    c, k, x0, _ = p
    s = expit(k * (x - x0))
    ds = s * (1.0 - s)
    return np.column_stack([s, c * ds * (x - x0), -c * ds * k, np.ones_like(x)])


def initial_guesses(x: np.ndarray, y: np.ndarray, n_starts: int = 16) -> list[np.ndarray]:
    """Sign and scale combinations of (c, k) with y0 anchored at either end of the data."""
    spread = max(float(np.ptp(y)), 1e-6)
    x0 = float(np.median(x))
    starts = []
    for c_sign in (1.0, -1.0):
        for k in (START_STEEPNESS, -START_STEEPNESS):
            for y0 in (float(np.min(y)), float(np.max(y))):
                for scale in START_SCALES:
                    starts.append(np.array([c_sign * scale * spread, k, x0, y0]))
    return starts[:n_starts]


def _solve(
    start: np.ndarray, x: np.ndarray, y: np.ndarray, config: FitConfig
) -> tuple[np.ndarray, float] | None:
    lower = np.array([-np.inf, -config.k_bound, -np.inf, -np.inf])
    upper = np.array([np.inf, config.k_bound, np.inf, np.inf])
    start = np.clip(start, lower, upper)
    try:
        result = least_squares(
            _residuals,
            start,
            jac=_jacobian,
            bounds=(lower, upper),
            method="trf",
            ftol=config.tolerance,
            xtol=config.tolerance,
            gtol=config.tolerance,
            max_nfev=config.max_iterations,
            args=(x, y),
        )
    except (ValueError, FloatingPointError, np.linalg.LinAlgError) as e:
        logger.debug("sigmoid start %s failed: %s", start, e)
        return None
    cost = float(np.sum(_residuals(result.x, x, y) ** 2))
    if not np.all(np.isfinite(result.x)) or not math.isfinite(cost):
        return None
    return result.x, cost


def fit_degradation_curve(
    points: Sequence[tuple[float, float]],
    config: FitConfig | None = None,
    workers: int | None = None,
) -> SigmoidFit:
    config = config or FitConfig()
    if len(points) < 4:
        raise SigmoidFitError(f"a sigmoid has 4 parameters; got only {len(points)} points")
    x = np.array([eta for eta, _ in points], dtype=float)
    y = np.array([value for _, value in points], dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise SigmoidFitError("points must be finite")
    n_levels = len(np.unique(x))
    if n_levels < 2:
        raise SigmoidFitError("a sigmoid fit needs at least 2 distinct eta values")

    warnings: list[str] = []
    if n_levels < MIN_WELL_CONDITIONED_LEVELS:
        message = (
            f"sigmoid fitted to {n_levels} distinct levels (< {MIN_WELL_CONDITIONED_LEVELS}); "
            "parameters are poorly conditioned"
        )
        logger.warning(message)
        warnings.append(message)

    mean, std = float(np.mean(y)), float(np.std(y))
    if std == 0.0:
        params = SigmoidParams(c=0.0, k=0.0, x0=float(np.median(x)), y0=mean)
        return SigmoidFit(params, 0.0, mean, std, len(points), n_levels, None, tuple(warnings))

    z = (y - mean) / std
    starts = initial_guesses(x, z, config.n_starts)
    workers = S3RRSettings.from_environ().get_workers(workers)
    if workers <= 1:
        solutions = [_solve(start, x, z, config) for start in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            solutions = list(executor.map(lambda s: _solve(s, x, z, config), starts))

    best_index: int | None = None
    best: tuple[np.ndarray, float] | None = None
    for index, solution in enumerate(solutions):
        if solution is not None and (best is None or solution[1] < best[1]):
            best_index, best = index, solution
    if best is None:
        raise SigmoidFitError(f"all {len(starts)} solver starts diverged")
    # the flat curve at the data mean costs exactly sum(z**2)
    constant_cost = float(np.sum(z**2))
    if constant_cost < best[1]:
        best_index, best = None, (np.array([0.0, 0.0, float(np.median(x)), 0.0]), constant_cost)

    c, k, x0, y0 = best[0]
    params = SigmoidParams(c=float(c * std), k=float(k), x0=float(x0), y0=float(y0 * std + mean))
    residual = float(np.sum((sigmoid_eval(params, x) - y) ** 2))
    logger.info(
        "sigmoid fit on %d points: c=%.4f k=%.4f x0=%.4f y0=%.4f residual=%.6g",
        len(points),
        params.c,
        params.k,
        params.x0,
        params.y0,
        residual,
    )
    return SigmoidFit(params, residual, mean, std, len(points), n_levels, best_index, tuple(warnings))


def fit_sigmoid(
    points: Sequence[tuple[float, float]], config: FitConfig | None = None
) -> tuple[SigmoidParams, float]:
    fit = fit_degradation_curve(points, config)
    return fit.params, fit.residual
