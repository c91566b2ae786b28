"""Device-dependent baseline: two-qubit state tomography with readout error.

Each node measures in one of the Pauli bases X, Y, Z; outcome g (index 0)
is the +1 eigenvector and e (index 1) the -1 eigenvector. Readout error acts
on the reported bit after the basis rotation, as a binary confusion channel
per node. The state is reconstructed by linear inversion from Pauli
expectation values, optionally after undoing the confusion, and projected
back onto the density matrices.

**Usage:**
```python
confusion = (ConfusionMatrix(0.004, 0.007), ConfusionMatrix(0.010, 0.018))
counts = simulate_tomography(werner_state(0.859), 100_000, confusion, seed=1)
rho = reconstruct_state(counts, correct_readout=True, confusion=confusion)
```
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .error import DomainError, SingularConfusionError, TrialLogParseError
from .quantum_core import DensityMatrix, pauli, state_fidelity_to_bell
from .simulator.trial_log import FORMAT_VERSION, read_header

BASES = ("X", "Y", "Z")
SETTINGS = tuple(p + q for p in BASES for q in BASES)
"""The nine basis pairs, node A's basis first."""

OUTCOMES = ("gg", "ge", "eg", "ee")
_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class ConfusionMatrix:
    """Readout error of one node.

    Attributes:
        p_eg: Probability of reporting e when the qubit was in g.
        p_ge: Probability of reporting g when the qubit was in e.
    """

    p_eg: float = 0.0
    p_ge: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_eg", "p_ge"):
            value = getattr(self, name)
            if not 0.0 <= value < 0.5:
                raise DomainError(f"{name} must lie in [0, 0.5), got {value}")

    def matrix(self) -> np.ndarray:
        """C[reported, true]; columns sum to one."""
        return np.array([[1.0 - self.p_eg, self.p_ge], [self.p_eg, 1.0 - self.p_ge]])

    @property
    def readout_fidelity(self) -> float:
        return 1.0 - self.p_eg - self.p_ge


NO_CONFUSION = (ConfusionMatrix(), ConfusionMatrix())


@dataclass(frozen=True)
class TomographyCounts:
    """Outcome counts of the nine settings.

    Attributes:
        counts: int64 array (9, 4); rows follow SETTINGS, columns OUTCOMES.
        shots: Repetitions per setting.
    """

    counts: np.ndarray
    shots: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (len(SETTINGS), len(OUTCOMES)):
            raise ValueError(f"counts must have shape (9, 4), got {counts.shape}")
        if self.shots < 1:
            raise ValueError(f"shots must be at least 1, got {self.shots}")
        if (counts < 0).any() or (counts.sum(axis=1) != self.shots).any():
            raise ValueError("every setting's counts must be nonnegative and sum to shots")
        object.__setattr__(self, "counts", counts)

    def frequencies(self) -> np.ndarray:
        return self.counts / self.shots


def _outcome_projectors(basis: str) -> tuple[np.ndarray, np.ndarray]:
    p = pauli(basis)
    identity = np.eye(2, dtype=complex)
    return (identity + p) / 2.0, (identity - p) / 2.0


def _apply_confusion(probs: np.ndarray, confusion: Sequence[ConfusionMatrix]) -> np.ndarray:
    """Maps (..., 4) true-outcome tables to reported-outcome tables."""
    c_a = confusion[0].matrix()
    c_b = confusion[1].matrix()
    table = probs.reshape(probs.shape[:-1] + (2, 2))
    return np.einsum("ca,db,...ab->...cd", c_a, c_b, table).reshape(probs.shape)


def exact_tomography_probs(
    rho: DensityMatrix, confusion: Sequence[ConfusionMatrix] = NO_CONFUSION
) -> np.ndarray:
    """Infinite-shot outcome probabilities, shape (9, 4), including readout error."""
    probs = np.zeros((len(SETTINGS), len(OUTCOMES)))
    for row, setting in enumerate(SETTINGS):
        proj_a = _outcome_projectors(setting[0])
        proj_b = _outcome_projectors(setting[1])
        for a in (0, 1):
            for b in (0, 1):
                op = np.kron(proj_a[a], proj_b[b])
                probs[row, 2 * a + b] = np.real(np.trace(op @ rho.mat))
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    return _apply_confusion(probs, confusion)


def simulate_tomography(
    rho: DensityMatrix,
    shots: int,
    confusion: Sequence[ConfusionMatrix] = NO_CONFUSION,
    seed: int = 0,
) -> TomographyCounts:
    """Samples ``shots`` outcomes per setting; each setting draws from its own
    generator spawned from ``seed``."""
    if shots < 1:
        raise ValueError(f"shots must be at least 1, got {shots}")
    probs = exact_tomography_probs(rho, confusion)
    streams = np.random.SeedSequence(seed).spawn(len(SETTINGS))
    counts = np.array(
        [
            np.random.default_rng(stream).multinomial(shots, row / row.sum())
            for stream, row in zip(streams, probs)
        ],
        dtype=np.int64,
    )
    return TomographyCounts(counts, shots)


def inverse_confusion(matrix: np.ndarray) -> np.ndarray:
    """Inverse of a 2x2 confusion matrix.

    Raises:
        SingularConfusionError: If the readout fidelity (the determinant) is not positive.
    """
    matrix = np.asarray(matrix, dtype=float)
    if np.linalg.det(matrix) <= _SINGULAR_TOL:
        raise SingularConfusionError()
    return np.linalg.inv(matrix)


def _pauli_expectations(freqs: np.ndarray) -> np.ndarray:
    """T[i, j] = <s_i (x) s_j> for s = (I, X, Y, Z) from (9, 4) outcome frequencies.

    Single-node terms are averaged over the three settings that contain them.
    """
    index = {"X": 1, "Y": 2, "Z": 3}
    sign = np.array([1.0, -1.0])
    t = np.zeros((4, 4))
    t[0, 0] = 1.0
    marginal_a = np.zeros(4)
    marginal_b = np.zeros(4)
    for row, setting in enumerate(SETTINGS):
        table = freqs[row].reshape(2, 2)
        i, j = index[setting[0]], index[setting[1]]
        t[i, j] = sign @ table @ sign
        marginal_a[i] += sign @ table.sum(axis=1)
        marginal_b[j] += table.sum(axis=0) @ sign
    t[1:, 0] = marginal_a[1:] / len(BASES)
    t[0, 1:] = marginal_b[1:] / len(BASES)
    return t


def _project_to_state(mat: np.ndarray) -> np.ndarray:
    mat = (mat + mat.conj().T) / 2.0
    values, vectors = np.linalg.eigh(mat)
    values = np.clip(values, 0.0, None)
    out = (vectors * values) @ vectors.conj().T
    out = (out + out.conj().T) / 2.0
    return out / np.trace(out).real


def reconstruct_state(
    counts: TomographyCounts | np.ndarray,
    correct_readout: bool = False,
    confusion: Sequence[ConfusionMatrix] = NO_CONFUSION,
) -> DensityMatrix:
    """Linear-inversion estimate of the two-qubit state.

    Args:
        counts: Measured counts, or a (9, 4) table of outcome frequencies.
        correct_readout: Undo each node's confusion before estimating expectations.
        confusion: Per-node confusion used for the correction.

    Raises:
        SingularConfusionError: If a confusion matrix cannot be inverted.
    """
    if isinstance(counts, TomographyCounts):
        freqs = counts.frequencies()
    else:
        freqs = np.asarray(counts, dtype=float)
    if correct_readout:
        inv_a = inverse_confusion(confusion[0].matrix())
        inv_b = inverse_confusion(confusion[1].matrix())
        freqs = np.einsum(
            "ca,db,sab->scd", inv_a, inv_b, freqs.reshape(-1, 2, 2)
        ).reshape(freqs.shape)

    t = _pauli_expectations(freqs)
    sigma = [pauli(axis) for axis in "IXYZ"]
    mat = sum(t[i, j] * np.kron(sigma[i], sigma[j]) for i in range(4) for j in range(4)) / 4.0
    label = "tomography (readout corrected)" if correct_readout else "tomography"
    return DensityMatrix(_project_to_state(mat), label)


def readout_fidelity(confusion: ConfusionMatrix) -> float:
    """F_r = 1 - p(e|g) - p(g|e)."""
    return confusion.readout_fidelity


def eps_z_from_readout(f_r: float) -> float:
    """Symmetric-error readout flip probability (1 - F_r) / 2.

    Raises:
        DomainError: If F_r lies outside [0, 1].
    """
    if not 0.0 <= f_r <= 1.0:
        raise DomainError(f"Readout fidelity must lie in [0, 1], got {f_r}")
    return (1.0 - f_r) / 2.0


def combined_eps_z(confusion: Sequence[ConfusionMatrix], worst_case: bool = False) -> float:
    """Readout flip probability valid for both nodes.

    The symmetric-error bound allows the smaller node value; ``worst_case``
    takes the larger one instead.
    """
    values = [eps_z_from_readout(readout_fidelity(c)) for c in confusion]
    return max(values) if worst_case else min(values)


def tomographic_measurement_fidelity(eps_r: float, eps_z: float) -> float:
    """Lower bound 1 - eps_r - eps_z - 2 sqrt(eps_r eps_z) on the measurement
    fidelity, clamped to [0, 1].

    Raises:
        DomainError: If either probability lies outside [0, 1).
    """
    for name, value in (("eps_r", eps_r), ("eps_z", eps_z)):
        if not 0.0 <= value < 1.0:
            raise DomainError(f"{name} must lie in [0, 1), got {value}")
    bound = 1.0 - eps_r - eps_z - 2.0 * math.sqrt(eps_r * eps_z)
    return min(max(bound, 0.0), 1.0)


@dataclass(frozen=True)
class TomographyReport:
    """Fidelities of one tomography baseline run."""

    target_fidelity: float
    fidelity_corrected: float
    fidelity_uncorrected: float
    exact_fidelity_uncorrected: float
    eps_r: float
    eps_z: float
    eps_z_worst: float
    measurement_fidelity: float
    measurement_fidelity_worst: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def tomography_baseline(
    rho: DensityMatrix,
    shots: int,
    confusion: Sequence[ConfusionMatrix],
    seed: int,
    eps_r: float,
) -> tuple[TomographyCounts, TomographyReport]:
    """Simulates tomography of ``rho`` and reports Bell fidelities with and
    without readout correction next to the measurement-fidelity bound."""
    counts = simulate_tomography(rho, shots, confusion, seed)
    exact = exact_tomography_probs(rho, confusion)
    eps_z = combined_eps_z(confusion)
    eps_z_worst = combined_eps_z(confusion, worst_case=True)
    report = TomographyReport(
        target_fidelity=state_fidelity_to_bell(rho),
        fidelity_corrected=state_fidelity_to_bell(reconstruct_state(counts, True, confusion)),
        fidelity_uncorrected=state_fidelity_to_bell(reconstruct_state(counts, False)),
        exact_fidelity_uncorrected=state_fidelity_to_bell(reconstruct_state(exact, False)),
        eps_r=eps_r,
        eps_z=eps_z,
        eps_z_worst=eps_z_worst,
        measurement_fidelity=tomographic_measurement_fidelity(eps_r, eps_z),
        measurement_fidelity_worst=tomographic_measurement_fidelity(eps_r, eps_z_worst),
    )
    return counts, report


def write_counts(path: str, counts: TomographyCounts, header: dict | None = None) -> None:
    """Writes counts in the ``#``-header CSV convention of trial logs."""
    with open(path, "w", newline="\n") as f:
        f.write(f"# format_version={FORMAT_VERSION}\n")
        f.write(f"# shots={counts.shots}\n")
        for key, value in (header or {}).items():
            f.write(f"# {key}={value}\n")
        f.write(f"# columns=setting,{','.join(OUTCOMES)}\n")
        for setting, row in zip(SETTINGS, counts.counts):
            f.write(setting + "," + ",".join(str(int(v)) for v in row) + "\n")


def read_counts(path: str) -> TomographyCounts:
    """Reads a file written by ``write_counts``.

    Raises:
        TrialLogParseError: On a malformed header or row, naming the line.
    """
    rows: dict[str, list[int]] = {}
    with open(path) as f:
        header, number = read_header(f)
        if "shots" not in header:
            raise TrialLogParseError("header lacks shots", max(number, 1))
        try:
            shots = int(header["shots"])
        except ValueError as e:
            raise TrialLogParseError(f"invalid shots {header['shots']!r}", number) from e
        for line in f:
            number += 1
            if not line.strip():
                continue
            fields = line.strip().split(",")
            if len(fields) != 1 + len(OUTCOMES) or fields[0] not in SETTINGS:
                raise TrialLogParseError(f"malformed counts row {line.strip()!r}", number)
            if fields[0] in rows:
                raise TrialLogParseError(f"duplicate setting {fields[0]}", number)
            try:
                values = [int(v) for v in fields[1:]]
            except ValueError as e:
                raise TrialLogParseError(f"non-integer count in {line.strip()!r}", number) from e
            if sum(values) != shots or min(values) < 0:
                raise TrialLogParseError(f"counts of {fields[0]} do not sum to {shots}", number)
            rows[fields[0]] = values
    missing = [s for s in SETTINGS if s not in rows]
    if missing:
        raise TrialLogParseError(f"missing settings {missing}", number)
    return TomographyCounts(np.array([rows[s] for s in SETTINGS], dtype=np.int64), shots)
