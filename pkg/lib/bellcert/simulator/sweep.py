"""Scan of the CHSH value against the measurement basis offset angle.

Each grid point is an independent simulated run with its own generator key
derived from the sweep seed and the point index.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from ..logger import Logger, null_logger
from .block import correlators_from_counts
from .model import ExperimentConfig, NoiseModel
from .trial_simulator import NullSink, expected_s, simulate


@dataclass(frozen=True)
class SweepPoint:
    """One offset angle of the sweep.

    Attributes:
        theta_deg: Offset angle in degrees.
        correlators: Empirical E[x, y] as a 2x2 array.
        s: Empirical CHSH value.
        expected_s: CHSH value of the noise model at this offset.
        n_trials: Trials simulated at this point.
    """

    theta_deg: float
    correlators: np.ndarray
    s: float
    expected_s: float
    n_trials: int

    def to_dict(self) -> dict:
        e = self.correlators
        return {
            "theta_deg": self.theta_deg,
            "e00": float(e[0, 0]),
            "e01": float(e[0, 1]),
            "e10": float(e[1, 0]),
            "e11": float(e[1, 1]),
            "s": self.s,
            "expected_s": self.expected_s,
            "n_trials": self.n_trials,
        }


def theta_grid(start_deg: float, stop_deg: float, steps: int) -> list[float]:
    """``steps`` evenly spaced angles from start to stop inclusive, in degrees.

    Raises:
        ValueError: If steps < 1.
    """
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    return [float(t) for t in np.linspace(start_deg, stop_deg, steps)]


def _point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def sweep_offset(
    thetas_deg: list[float],
    trials_per_point: int,
    noise: NoiseModel,
    seed: int,
    workers: int = 1,
    logger: Logger | None = None,
) -> list[SweepPoint]:
    """Simulates ``trials_per_point`` trials at every offset of ``thetas_deg``.

    Raises:
        ValueError: If the grid is empty.
    """
    if len(thetas_deg) == 0:
        raise ValueError("sweep needs a nonempty theta grid")
    logger = logger or null_logger()
    logger.info("Starting offset sweep", points=len(thetas_deg), trials_per_point=trials_per_point)
    points = []
    for index, theta_deg in enumerate(thetas_deg):
        point_noise = replace(noise, theta_offset=math.radians(theta_deg))
        config = ExperimentConfig(
            n_trials=trials_per_point,
            block_size=trials_per_point,
            seed=_point_seed(seed, index),
            noise=point_noise,
            workers=workers,
        )
        summary = simulate(config, NullSink(), logger)
        point = SweepPoint(
            theta_deg=float(theta_deg),
            correlators=correlators_from_counts(summary.counts),
            s=summary.s_correlators,
            expected_s=expected_s(point_noise),
            n_trials=trials_per_point,
        )
        points.append(point)
        logger.debug("Sweep point", theta_deg=point.theta_deg, s=point.s)
    logger.info("Offset sweep finished", points=len(points))
    return points


def find_peaks(points: list[SweepPoint], count: int = 2) -> list[SweepPoint]:
    """The ``count`` highest local maxima of S along the grid, in grid order.

    Endpoints count as maxima when they exceed their single neighbour.
    """
    s = [p.s for p in points]
    maxima = []
    for i, value in enumerate(s):
        left = s[i - 1] if i > 0 else -math.inf
        right = s[i + 1] if i + 1 < len(s) else -math.inf
        if value > left and value >= right:
            maxima.append(i)
    best = sorted(maxima, key=lambda i: s[i], reverse=True)[:count]
    return [points[i] for i in sorted(best)]
