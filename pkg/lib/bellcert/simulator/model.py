"""Parameter types of the trial simulator."""

import math
from dataclasses import asdict, dataclass, field

from ..error import ConfigError
from ..quantum_core import optimal_theta

BETA_B = math.pi / 2.0
"""Node B's two measurement directions are orthogonal on the Bloch circle."""


@dataclass(frozen=True)
class NoiseModel:
    """Physical noise of the simulated two-node device.

    Attributes:
        bell_fidelity: Fidelity of the shared Werner state to |phi+>, in [0.25, 1].
        alpha_a: Separation of node A's two bases, radians.
        theta_offset: Calibrated measurement basis offset angle, radians.
        readout_eg_a: p(e|g) of node A.
        readout_ge_a: p(g|e) of node A.
        readout_eg_b: p(e|g) of node B.
        readout_ge_b: p(g|e) of node B.
        drift_amplitude: Amplitude of the offset drift, radians. 0 disables drift.
        drift_period: Period of the offset drift in trials.
    """

    bell_fidelity: float = 1.0
    alpha_a: float = math.pi / 2.0
    theta_offset: float = field(default_factory=lambda: optimal_theta(math.pi / 2.0, BETA_B))
    readout_eg_a: float = 0.0
    readout_ge_a: float = 0.0
    readout_eg_b: float = 0.0
    readout_ge_b: float = 0.0
    drift_amplitude: float = 0.0
    drift_period: int = 1 << 22

    def __post_init__(self) -> None:
        if not 0.25 <= self.bell_fidelity <= 1.0:
            raise ConfigError(f"bell_fidelity must lie in [0.25, 1], got {self.bell_fidelity}")
        if not 0.0 <= self.alpha_a <= math.pi:
            raise ConfigError(f"alpha_a must lie in [0, pi], got {self.alpha_a}")
        for name in ("readout_eg_a", "readout_ge_a", "readout_eg_b", "readout_ge_b"):
            value = getattr(self, name)
            if not 0.0 <= value < 0.5:
                raise ConfigError(f"{name} must lie in [0, 0.5), got {value}")
        if self.drift_period <= 0:
            raise ConfigError(f"drift_period must be positive, got {self.drift_period}")

    @property
    def readout_fidelity_a(self) -> float:
        return 1.0 - self.readout_eg_a - self.readout_ge_a

    @property
    def readout_fidelity_b(self) -> float:
        return 1.0 - self.readout_eg_b - self.readout_ge_b

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentConfig:
    """A simulated Bell-test run.

    Attributes:
        n_trials: Number of trials, at least 1.
        block_size: Trials between recalibrations; divides n_trials.
        seed: 64-bit key of the counter-based generator.
        noise: The device noise model.
        repetition_rate: Trial rate in Hz, recorded as metadata only.
        report_size: Trials per S-tracking window; divides block_size.
        workers: Threads generating blocks; never changes the output.
    """

    n_trials: int
    block_size: int
    seed: int
    noise: NoiseModel = field(default_factory=NoiseModel)
    repetition_rate: float = 50e3
    report_size: int | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be at least 1, got {self.n_trials}")
        if self.block_size < 1 or self.n_trials % self.block_size != 0:
            raise ConfigError(
                f"block_size {self.block_size} does not divide n_trials {self.n_trials}"
            )
        if self.report_size is None:
            object.__setattr__(self, "report_size", self.block_size)
        if self.report_size < 1 or self.block_size % self.report_size != 0:
            raise ConfigError(
                f"report_size {self.report_size} does not divide block_size {self.block_size}"
            )
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")

    @property
    def n_blocks(self) -> int:
        return self.n_trials // self.block_size

    def header(self) -> dict:
        """Flat key/value description written into trial log headers."""
        values = {
            "n_trials": self.n_trials,
            "block_size": self.block_size,
            "seed": self.seed,
            "repetition_rate": self.repetition_rate,
            "report_size": self.report_size,
        }
        values.update(self.noise.to_dict())
        return values
