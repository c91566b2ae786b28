"""Seeded simulation of two-node CHSH trials under a physical noise model.

Each trial draws uniform input bits x and y, evaluates the outcome
distribution of the Werner state under node A's and node B's measurements
(including the offset drift accumulated since the last recalibration), passes
the ideal outcomes through each node's readout confusion channel and samples
(a, b). The trial stream is split into calibration blocks; the drift resets at
every block boundary.

**Usage:**
```python
config = ExperimentConfig(n_trials=2**24, block_size=2**20, seed=7, noise=NoiseModel(0.859))
sink = CollectingSink()
summary = simulate(config, sink, logger)
```
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..error import SinkFailureError
from ..finite_stats import TrialTally
from ..logger import Logger, null_logger
from ..protos.trial_sink import TrialSinkProto
from ..quantum_core import (
    QubitMeasurement,
    measurement_projectors,
    s_from_probs,
    werner_state,
)
from .block import TrialBlock, outcome_codes, s_from_counts, tally_from_counts
from .model import BETA_B, ExperimentConfig, NoiseModel
from .rng import input_bits, outcome_uniforms, trial_words


def confusion_matrix(p_eg: float, p_ge: float) -> np.ndarray:
    """Column-stochastic readout channel C[reported, true] for outcomes g=0, e=1."""
    return np.array([[1.0 - p_eg, p_ge], [p_eg, 1.0 - p_ge]])


def offset_at(noise: NoiseModel, local_index) -> np.ndarray:
    """Offset angle after ``local_index`` trials since the last recalibration."""
    local_index = np.asarray(local_index, dtype=float)
    if noise.drift_amplitude == 0.0:
        return np.full(local_index.shape, noise.theta_offset)
    return noise.theta_offset + noise.drift_amplitude * np.sin(
        2.0 * math.pi * local_index / noise.drift_period
    )


def _conditional_operators(noise: NoiseModel) -> np.ndarray:
    """R[x, a] = Tr_A[(P_a^x (x) 1) rho], the unnormalized state of node B
    after node A measured x and obtained a."""
    rho = werner_state(noise.bell_fidelity).mat.reshape(2, 2, 2, 2)
    m_a = QubitMeasurement(angle_alpha=noise.alpha_a, node="A")
    ops = np.zeros((2, 2, 2, 2), dtype=complex)
    for x in (0, 1):
        for a, proj in enumerate(measurement_projectors(m_a, x)):
            ops[x, a] = np.einsum("ki,ijkl->jl", proj, rho)
    return ops


def _prob_batch(
    noise: NoiseModel, x: np.ndarray, y: np.ndarray, local_index: np.ndarray
) -> np.ndarray:
    """Reported-outcome probabilities p[t, a, b] for a batch of trials."""
    ops = _conditional_operators(noise)[x]
    # node B: mirrored pair referenced at -pi/4, rotated by twice the offset
    bloch = 2.0 * offset_at(noise, local_index) - math.pi / 4.0 - BETA_B * y
    c = np.cos(bloch / 2.0)
    s = np.sin(bloch / 2.0)
    kets = np.stack([np.stack([c, s], axis=-1), np.stack([s, -c], axis=-1)], axis=1)
    ideal = np.real(np.einsum("tbj,tajl,tbl->tab", kets, ops, kets))
    ideal = np.clip(ideal, 0.0, None)
    ideal /= ideal.sum(axis=(1, 2), keepdims=True)
    conf_a = confusion_matrix(noise.readout_eg_a, noise.readout_ge_a)
    conf_b = confusion_matrix(noise.readout_eg_b, noise.readout_ge_b)
    return np.einsum("ca,db,tab->tcd", conf_a, conf_b, ideal)


def ideal_prob_table(noise: NoiseModel, trial_index: int) -> np.ndarray:
    """Outcome table p(a, b | x, y) indexed ``[x, y, a, b]`` after
    ``trial_index`` trials since the last recalibration."""
    x = np.repeat([0, 1], 2)
    y = np.tile([0, 1], 2)
    probs = _prob_batch(noise, x, y, np.full(4, trial_index))
    return probs.reshape(2, 2, 2, 2)


def expected_s(noise: NoiseModel) -> float:
    """Exact CHSH value of the calibrated (drift-free) model."""
    return s_from_probs(ideal_prob_table(noise, 0))


@dataclass
class SimulationSummary:
    """Reduction of a simulated run.

    Attributes:
        tally: Total trials and wins.
        counts: Outcome counts indexed ``[x, y, a, b]``.
        block_s: CHSH value of each calibration block.
        report_s: CHSH value of each report window.
        expected_s: CHSH value of the noise model.
    """

    tally: TrialTally
    counts: np.ndarray
    block_s: list[float] = field(default_factory=list)
    report_s: list[float] = field(default_factory=list)
    expected_s: float = 0.0

    @property
    def s_measured(self) -> float:
        return self.tally.s_value

    @property
    def s_correlators(self) -> float:
        return s_from_counts(self.counts)

    def to_dict(self) -> dict:
        return {
            "n": self.tally.n,
            "c": self.tally.c,
            "s_measured": self.s_measured,
            "s_correlators": self.s_correlators,
            "expected_s": self.expected_s,
            "block_s": list(self.block_s),
            "report_s": list(self.report_s),
        }


@dataclass
class _BlockResult:
    block: TrialBlock
    window_counts: np.ndarray


def _simulate_block(config: ExperimentConfig, block_index: int) -> _BlockResult:
    start = block_index * config.block_size
    words = trial_words(config.seed, start, config.block_size)
    x = input_bits(words, 0)
    y = input_bits(words, 1)
    u = outcome_uniforms(words)

    local_index = np.arange(config.block_size)
    probs = _prob_batch(config.noise, x, y, local_index).reshape(-1, 4)
    cumulative = np.cumsum(probs, axis=1)
    code = np.minimum((u[:, None] >= cumulative[:, :3]).sum(axis=1), 3)
    a = (code >> 1).astype(np.uint8)
    b = (code & 1).astype(np.uint8)

    n_windows = config.block_size // config.report_size
    window = local_index // config.report_size
    window_counts = np.bincount(
        window * 16 + outcome_codes(x, y, a, b), minlength=16 * n_windows
    ).reshape(n_windows, 2, 2, 2, 2)
    return _BlockResult(TrialBlock(start, x, y, a, b), window_counts)


def simulate(
    config: ExperimentConfig, sink: TrialSinkProto, logger: Logger | None = None
) -> SimulationSummary:
    """Generates ``config.n_trials`` trials and feeds them to ``sink`` block by block.

    Blocks may be generated on several threads; the sink always receives them
    in index order and the output does not depend on ``config.workers``.

    Raises:
        SinkFailureError: If the sink raises; reports the trials delivered.
    """
    logger = logger or null_logger()
    logger.info(
        "Starting simulation",
        n_trials=config.n_trials,
        block_size=config.block_size,
        seed=config.seed,
        workers=config.workers,
    )
    total_counts = np.zeros((2, 2, 2, 2), dtype=np.int64)
    block_s: list[float] = []
    report_s: list[float] = []
    written = 0

    with ThreadPoolExecutor(max_workers=config.workers) as executor:
        for first in range(0, config.n_blocks, config.workers):
            indices = range(first, min(first + config.workers, config.n_blocks))
            for result in executor.map(lambda i: _simulate_block(config, i), indices):
                try:
                    sink.consume(result.block)
                except Exception as e:
                    raise SinkFailureError("Trial sink failed", written) from e
                written += len(result.block)

                block_counts = result.window_counts.sum(axis=0)
                total_counts += block_counts
                block_s.append(s_from_counts(block_counts))
                report_s.extend(s_from_counts(w) for w in result.window_counts)
                logger.debug(
                    "Block simulated",
                    block=len(block_s) - 1,
                    s=block_s[-1],
                    trials_written=written,
                )

    summary = SimulationSummary(
        tally=tally_from_counts(total_counts),
        counts=total_counts,
        block_s=block_s,
        report_s=report_s,
        expected_s=expected_s(config.noise),
    )
    logger.info(
        "Simulation finished",
        n_trials=summary.tally.n,
        wins=summary.tally.c,
        s_measured=summary.s_measured,
        expected_s=summary.expected_s,
    )
    return summary


class CollectingSink(TrialSinkProto):
    """Keeps every delivered block in memory."""

    def __init__(self) -> None:
        self.blocks: list[TrialBlock] = []

    def consume(self, block: TrialBlock) -> None:
        self.blocks.append(block)

    def as_array(self) -> np.ndarray:
        """(n, 5) array with columns index, x, y, a, b."""
        if not self.blocks:
            return np.zeros((0, 5), dtype=np.int64)
        return np.concatenate([block.as_array() for block in self.blocks])


class NullSink(TrialSinkProto):
    """Discards trials; used when only the summary is needed."""

    def consume(self, block: TrialBlock) -> None:
        pass
