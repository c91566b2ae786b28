"""Light-cone time budget of a Bell trial.

The locality loophole is closed when every trial finishes before light can
travel the shortest distance between one node's start event and the other
node's stop event.

**Usage:**
```python
cfg = SpaceTimeConfig(separation_distance=32.928, protocol_duration=106.7)
margin = locality_margin(cfg)
```
"""

import math
from dataclasses import dataclass

from .error import DomainError

SPEED_OF_LIGHT = 299_792_458.0
"""Speed of light in vacuum in m/s (exact)."""

DEFAULT_DISTANCE_SIGMA_NS = 0.01
DEFAULT_DURATION_SIGMA_NS = 0.3


@dataclass(frozen=True)
class SpaceTimeConfig:
    """Event geometry and protocol timing of one trial.

    Attributes:
        separation_distance: Shortest start-to-stop distance d in meters.
        protocol_duration: Measured trial duration in nanoseconds.
        distance_sigma: Uncertainty of d expressed as light time, in nanoseconds.
        duration_sigma: Uncertainty of the duration in nanoseconds.
        k_sigma: Number of combined standard deviations the margin must exceed.
    """

    separation_distance: float
    protocol_duration: float
    distance_sigma: float = DEFAULT_DISTANCE_SIGMA_NS
    duration_sigma: float = DEFAULT_DURATION_SIGMA_NS
    k_sigma: float = 3.0

    def __post_init__(self) -> None:
        if not self.separation_distance > 0.0:
            raise DomainError(
                f"separation_distance must be positive, got {self.separation_distance}"
            )
        for name in ("protocol_duration", "distance_sigma", "duration_sigma", "k_sigma"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be nonnegative, got {getattr(self, name)}")


@dataclass(frozen=True)
class LocalityMargin:
    """Result of ``locality_margin``."""

    budget_ns: float
    margin_ns: float
    closed: bool
    margin_fraction: float
    combined_sigma_ns: float

    def to_dict(self) -> dict:
        return {
            "budget_ns": self.budget_ns,
            "margin_ns": self.margin_ns,
            "closed": self.closed,
            "margin_fraction": self.margin_fraction,
            "combined_sigma_ns": self.combined_sigma_ns,
        }


def light_time_budget(d: float) -> float:
    """Time light needs to cover d meters, in nanoseconds.

    Raises:
        DomainError: If d is not positive.
    """
    if not d > 0.0:
        raise DomainError(f"Distance must be positive, got {d}")
    return d / SPEED_OF_LIGHT * 1e9


def locality_margin(cfg: SpaceTimeConfig) -> LocalityMargin:
    """Margin between the light-time budget and the protocol duration.

    The loophole counts as closed when the margin exceeds ``k_sigma`` times
    the quadrature sum of the two uncertainties.
    """
    budget = light_time_budget(cfg.separation_distance)
    margin = budget - cfg.protocol_duration
    sigma = math.hypot(cfg.distance_sigma, cfg.duration_sigma)
    return LocalityMargin(
        budget_ns=budget,
        margin_ns=margin,
        closed=margin > cfg.k_sigma * sigma,
        margin_fraction=margin / budget,
        combined_sigma_ns=sigma,
    )
