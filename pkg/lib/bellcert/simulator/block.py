"""Blocks of trial records and the outcome counts reduced from them."""

from dataclasses import dataclass

import numpy as np

from ..finite_stats import TrialTally
from ..quantum_core import s_from_correlators


@dataclass(frozen=True)
class TrialRecord:
    """One Bell-test trial: inputs x, y and outcomes a, b."""

    index: int
    x: int
    y: int
    a: int
    b: int


@dataclass(frozen=True)
class TrialBlock:
    """Consecutive trials ``start .. start + len - 1`` stored column-wise as uint8 arrays."""

    start: int
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    @property
    def index(self) -> np.ndarray:
        return np.arange(self.start, self.start + len(self), dtype=np.int64)

    def records(self):
        """Iterates the block as TrialRecords."""
        for i in range(len(self)):
            yield TrialRecord(
                self.start + i, int(self.x[i]), int(self.y[i]), int(self.a[i]), int(self.b[i])
            )

    def as_array(self) -> np.ndarray:
        """(len, 5) int64 array with columns index, x, y, a, b."""
        return np.column_stack([self.index, self.x, self.y, self.a, self.b]).astype(np.int64)


def outcome_codes(x, y, a, b) -> np.ndarray:
    """Flat code 8x + 4y + 2a + b of each trial."""
    return (
        (np.asarray(x, dtype=np.int64) << 3)
        | (np.asarray(y, dtype=np.int64) << 2)
        | (np.asarray(a, dtype=np.int64) << 1)
        | np.asarray(b, dtype=np.int64)
    )


def outcome_counts(x, y, a, b) -> np.ndarray:
    """Counts N(x, y, a, b) as an int64 array indexed ``[x, y, a, b]``."""
    return np.bincount(outcome_codes(x, y, a, b), minlength=16).reshape(2, 2, 2, 2)


def tally_from_counts(counts: np.ndarray) -> TrialTally:
    """Wins are a == b except for x = y = 1, where a != b wins."""
    counts = np.asarray(counts)
    wins = (
        counts[0, 0, 0, 0] + counts[0, 0, 1, 1]
        + counts[0, 1, 0, 0] + counts[0, 1, 1, 1]
        + counts[1, 0, 0, 0] + counts[1, 0, 1, 1]
        + counts[1, 1, 0, 1] + counts[1, 1, 1, 0]
    )
    return TrialTally(n=int(counts.sum()), c=int(wins))


def correlators_from_counts(counts: np.ndarray) -> np.ndarray:
    """Empirical correlators E[x, y]; settings never drawn give 0."""
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=(2, 3))
    same = counts[:, :, 0, 0] + counts[:, :, 1, 1]
    diff = counts[:, :, 0, 1] + counts[:, :, 1, 0]
    return np.divide(same - diff, totals, out=np.zeros((2, 2)), where=totals > 0)


def s_from_counts(counts: np.ndarray) -> float:
    """CHSH value from empirical correlators."""
    return s_from_correlators(correlators_from_counts(counts))
