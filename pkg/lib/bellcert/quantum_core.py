"""Two-qubit quantum objects used throughout the toolkit.

This module provides the Pauli matrices, the binary qubit measurements of the
two nodes, the CHSH operator, Born-rule outcome tables and the Werner family of
noisy Bell states. Matrices are dense numpy ``complex128`` arrays of shape 2x2
or 4x4; instances of the classes below are immutable.

Outcomes are bits ``a, b`` in {0, 1}; correlators map 0 to +1 and 1 to -1.

**Usage:**
```python
rho = werner_state(0.859)
m_a = QubitMeasurement(angle_alpha=math.pi / 2, node="A")
m_b = QubitMeasurement(angle_alpha=math.pi / 2, node="B")
table = joint_outcome_probs(rho, m_a, m_b, theta=optimal_theta(math.pi / 2, math.pi / 2))
s = s_from_probs(table)
```
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .error import NonHermitianInputError

HERMITIAN_TOL = 1e-9

PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / math.sqrt(2.0)

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    """Returns the 2x2 Pauli matrix for ``axis`` in {"x", "y", "z"}, or the identity for "i".

    Raises:
        ValueError: If the axis is unknown.
    """
    try:
        return _PAULI[axis.lower()].copy()
    except KeyError as e:
        raise ValueError(f"Unknown Pauli axis: {axis}") from e


def _frozen(mat: np.ndarray) -> np.ndarray:
    out = np.array(mat, dtype=complex)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DensityMatrix:
    """A two-qubit state: 4x4 Hermitian, unit trace, positive semidefinite.

    Attributes:
        mat: The 4x4 complex matrix, read-only.
        label: Free-form description of where the state came from.
    """

    mat: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        mat = _frozen(self.mat)
        if mat.shape != (4, 4):
            raise ValueError(f"Density matrix must be 4x4, got {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("Density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-12:
            raise ValueError(f"Density matrix trace is {np.trace(mat).real}, not 1")
        if hermitian_eigenvalues(mat)[0] < -1e-10:
            raise ValueError("Density matrix has a negative eigenvalue")
        object.__setattr__(self, "mat", mat)

    @classmethod
    def from_pure(cls, ket: np.ndarray, label: str = "") -> "DensityMatrix":
        """Builds |ket><ket| for a normalized 4-component ket."""
        ket = np.asarray(ket, dtype=complex)
        return cls(np.outer(ket, ket.conj()), label)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        """Returns I/4."""
        return cls(np.eye(4, dtype=complex) / 4.0, "maximally mixed")


@dataclass(frozen=True)
class QubitMeasurement:
    """A pair of binary projective qubit measurements selected by a setting bit.

    Setting 0 measures in the {|0>, |1>} basis, setting 1 in the
    {|+_alpha>, |-_alpha>} basis with
    |+_alpha> = cos(alpha/2)|0> + sin(alpha/2)|1> and
    |-_alpha> = sin(alpha/2)|0> - cos(alpha/2)|1>.

    Attributes:
        angle_alpha: Separation of the two bases on the Bloch circle, radians in [0, pi].
        node: "A" or "B".
    """

    angle_alpha: float
    node: str = "A"

    def __post_init__(self) -> None:
        if not 0.0 <= self.angle_alpha <= math.pi + 1e-12:
            raise ValueError(f"angle_alpha must lie in [0, pi], got {self.angle_alpha}")
        if self.node not in ("A", "B"):
            raise ValueError(f"node must be 'A' or 'B', got {self.node}")


@dataclass(frozen=True)
class BellDiagonalParams:
    """Parameters of the Werner family rho = v|phi+><phi+| + (1 - v) I/4.

    Attributes:
        target_fidelity: Overlap of the state with |phi+>, in [0.25, 1].
    """

    target_fidelity: float
    visibility: float = field(init=False)

    def __post_init__(self) -> None:
        if not 0.25 <= self.target_fidelity <= 1.0:
            raise ValueError(
                f"target_fidelity must lie in [0.25, 1], got {self.target_fidelity}"
            )
        object.__setattr__(self, "visibility", (4.0 * self.target_fidelity - 1.0) / 3.0)

    def state(self) -> DensityMatrix:
        """Builds the Werner state."""
        v = self.visibility
        mat = v * np.outer(PHI_PLUS, PHI_PLUS.conj()) + (1.0 - v) * np.eye(4) / 4.0
        return DensityMatrix(mat, f"werner(F={self.target_fidelity})")


def werner_state(target_fidelity: float) -> DensityMatrix:
    """Shorthand for ``BellDiagonalParams(target_fidelity).state()``."""
    return BellDiagonalParams(target_fidelity).state()


def bloch_ket(bloch_angle: float) -> tuple[np.ndarray, np.ndarray]:
    """Returns the orthonormal pair (cos(b/2), sin(b/2)), (sin(b/2), -cos(b/2)).

    The first ket points along ``cos(b) z + sin(b) x`` on the Bloch sphere.
    """
    c = math.cos(bloch_angle / 2.0)
    s = math.sin(bloch_angle / 2.0)
    return np.array([c, s], dtype=complex), np.array([s, -c], dtype=complex)


def direction_projectors(bloch_angle: float) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the two outcomes of a measurement along a direction of
    the x-z great circle at ``bloch_angle`` from z."""
    plus, minus = bloch_ket(bloch_angle)
    return np.outer(plus, plus.conj()), np.outer(minus, minus.conj())


def measurement_projectors(
    m: QubitMeasurement, setting: int
) -> tuple[np.ndarray, np.ndarray]:
    """Returns the two outcome projectors of ``m`` for ``setting`` in {0, 1}.

    Raises:
        ValueError: If the setting is not a bit.
    """
    if setting not in (0, 1):
        raise ValueError(f"setting must be 0 or 1, got {setting}")
    return direction_projectors(0.0 if setting == 0 else m.angle_alpha)


def node_b_bloch_angle(m: QubitMeasurement, setting: int, theta: float) -> float:
    """Bloch angle of node B's measurement direction for ``setting``.

    Node B's basis pair is mirrored with respect to node A's (the orientation
    |phi+> needs for a positive CHSH value), referenced at -pi/4 and rotated by
    the offset unitary exp(-i theta sigma_y), i.e. by 2 theta on the Bloch
    circle. S is therefore pi-periodic in theta, peaking at pi/4 and 5pi/4 for
    alpha = beta = pi/2.
    """
    if setting not in (0, 1):
        raise ValueError(f"setting must be 0 or 1, got {setting}")
    return 2.0 * theta - math.pi / 4.0 - (0.0 if setting == 0 else m.angle_alpha)


def optimal_theta(alpha_a: float, beta: float) -> float:
    """Offset angle in [0, pi) maximizing S for |phi+> with separations alpha_a and beta."""
    w = (
        1.0
        + cmath.exp(1j * beta)
        + cmath.exp(1j * alpha_a)
        - cmath.exp(1j * (alpha_a + beta))
    )
    return ((cmath.phase(w) + math.pi / 4.0) / 2.0) % math.pi


def chsh_operator(alpha: float, beta: float) -> np.ndarray:
    """The CHSH operator M_{alpha,beta} with node A measuring sigma_z and
    A1 = c_a sigma_z + s_a sigma_x, node B measuring sigma_z and
    B1 = c_b sigma_z + s_b sigma_x:

        M = Z(x)Z + Z(x)B1 + A1(x)Z - A1(x)B1
    """
    z = _PAULI["z"]
    x = _PAULI["x"]
    a1 = math.cos(alpha) * z + math.sin(alpha) * x
    b1 = math.cos(beta) * z + math.sin(beta) * x
    return np.kron(z, z) + np.kron(z, b1) + np.kron(a1, z) - np.kron(a1, b1)


def hermitian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Returns all eigenvalues of the Hermitian matrix ``m`` in ascending order.

    Raises:
        NonHermitianInputError: If max |M - M^dagger| exceeds 1e-9.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonHermitianInputError(f"Matrix must be square, got {m.shape}")
    deviation = float(np.max(np.abs(m - m.conj().T)))
    if deviation > HERMITIAN_TOL:
        raise NonHermitianInputError(f"Matrix deviates from Hermitian by {deviation:.3e}")
    return np.linalg.eigvalsh((m + m.conj().T) / 2.0)


def born_probability(rho: DensityMatrix, proj_a: np.ndarray, proj_b: np.ndarray) -> float:
    """Tr(rho (P_a (x) P_b)), clipped to [0, 1]."""
    p = float(np.real(np.trace(rho.mat @ np.kron(proj_a, proj_b))))
    return min(max(p, 0.0), 1.0)


def joint_outcome_probs(
    rho: DensityMatrix,
    m_a: QubitMeasurement,
    m_b: QubitMeasurement,
    theta: float,
) -> np.ndarray:
    """Born-rule table p(a, b | x, y) as an array indexed ``[x, y, a, b]``.

    Node A measures with ``measurement_projectors(m_a, x)``; node B measures
    along ``node_b_bloch_angle(m_b, y, theta)``.
    """
    table = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        proj_a = measurement_projectors(m_a, x)
        for y in (0, 1):
            proj_b = direction_projectors(node_b_bloch_angle(m_b, y, theta))
            for a in (0, 1):
                for b in (0, 1):
                    table[x, y, a, b] = born_probability(rho, proj_a[a], proj_b[b])
            table[x, y] /= table[x, y].sum()
    return table


def correlators(table: np.ndarray) -> np.ndarray:
    """Correlators <a.b>_{(x,y)} = p(a = b) - p(a != b) as a 2x2 array."""
    table = np.asarray(table)
    return table[:, :, 0, 0] + table[:, :, 1, 1] - table[:, :, 0, 1] - table[:, :, 1, 0]


def s_from_correlators(e: np.ndarray) -> float:
    """S = E00 + E01 + E10 - E11."""
    return float(e[0, 0] + e[0, 1] + e[1, 0] - e[1, 1])


def s_from_probs(table: np.ndarray) -> float:
    """CHSH value of an outcome table indexed ``[x, y, a, b]``."""
    return s_from_correlators(correlators(table))


def state_fidelity_to_bell(rho: DensityMatrix) -> float:
    """Overlap <phi+|rho|phi+>."""
    return float(np.real(PHI_PLUS.conj() @ rho.mat @ PHI_PLUS))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    return 0.5 * float(np.sum(np.abs(hermitian_eigenvalues(rho.mat - sigma.mat))))


def random_density_matrix(rng: np.random.Generator, rank: int = 4) -> DensityMatrix:
    """A random two-qubit state G G^dagger / Tr(G G^dagger) from a complex
    Gaussian 4 x rank matrix G."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    mat = g @ g.conj().T
    mat = (mat + mat.conj().T) / 2.0
    return DensityMatrix(mat / np.trace(mat).real, f"random(rank={rank})")
