"""Self-testing bounds derived from an observed CHSH value.

This module provides the closed-form lower bounds on the Bell-state fidelity
and on the measurement fidelity certified by a CHSH value S, the qubit
apparatus fidelity F(alpha) with its dual certificate and optimal injection,
the CHSH ceiling of an apparatus with basis separation alpha, and brute-force
oracles that check all of these numerically.

**Usage:**
```python
f_state = singlet_fidelity_bound(2.2351)
f_meas = measurement_fidelity_bound(2.2351)
lo, hi = alpha_range_for_s(2.236)
min_eig, dual_value = dual_certificate_check(1.0)
```
"""

import math
from dataclasses import dataclass

import numpy as np

from .error import OutOfRangeError
from .quantum_core import (
    PHI_PLUS,
    bloch_ket,
    chsh_operator,
    hermitian_eigenvalues,
    pauli,
)

TSIRELSON = 2.0 * math.sqrt(2.0)
S_LHV = 2.0
S_STAR = (16.0 + 14.0 * math.sqrt(2.0)) / 17.0
TRIVIAL_MEASUREMENT_FIDELITY = (2.0 * math.sqrt(2.0) + 4.0) / 8.0

# S marginally above Tsirelson from floating noise is accepted and clamped
_CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class SValue:
    """A CHSH value.

    Attributes:
        value: The dimensionless CHSH value.
    """

    value: float

    def __post_init__(self) -> None:
        if not -TSIRELSON - _CLAMP_TOL <= self.value <= TSIRELSON + _CLAMP_TOL:
            raise OutOfRangeError(f"S = {self.value} exceeds the Tsirelson bound")

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class InjectionMap:
    """A planar rotation [[cos t, sin t], [-sin t, cos t]] injecting an ideal
    qubit into the apparatus input space.

    Attributes:
        rotation_theta: The rotation angle t in radians.
    """

    rotation_theta: float

    def unitary(self) -> np.ndarray:
        """The 2x2 rotation matrix."""
        c = math.cos(self.rotation_theta)
        s = math.sin(self.rotation_theta)
        return np.array([[c, s], [-s, c]], dtype=complex)

    def choi_matrix(self) -> np.ndarray:
        """C = 2 (V (x) 1)|phi+><phi+|(V (x) 1)^dagger; the channel acts on the first factor."""
        ket = np.kron(self.unitary(), np.eye(2)) @ PHI_PLUS
        return 2.0 * np.outer(ket, ket.conj())


@dataclass(frozen=True)
class AlphaRange:
    """Interval of apparatus separations compatible with a CHSH value.

    Attributes:
        lo: Lower endpoint in radians.
        hi: Upper endpoint in radians.
    """

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.lo <= self.hi <= math.pi:
            raise ValueError(f"Invalid alpha range [{self.lo}, {self.hi}]")
        if abs((self.lo + self.hi) - math.pi) > 1e-12:
            raise ValueError("Alpha range must be symmetric about pi/2")

    def __iter__(self):
        return iter((self.lo, self.hi))

    def contains(self, alpha: float) -> bool:
        return self.lo <= alpha <= self.hi


def _certifiable_s(s: float | SValue) -> float:
    """Validates s in [2, 2 sqrt 2] and clamps floating noise at the upper end."""
    s = float(s)
    if math.isnan(s) or s < S_LHV or s > TSIRELSON + _CLAMP_TOL:
        raise OutOfRangeError(f"S = {s} is outside [2, 2*sqrt(2)]")
    return min(s, TSIRELSON)


def selftest_threshold() -> float:
    """S* = (16 + 14 sqrt 2) / 17, the value below which no state fidelity above 1/2 is certified."""
    return S_STAR


def singlet_fidelity_bound(s: float | SValue) -> float:
    """Lower bound 1/2 + 1/2 (S - S*) / (2 sqrt 2 - S*) on the extractable
    fidelity with |phi+>.

    Values of S between 2 and S* give a result below 1/2, which is not a
    certificate; callers compare against ``S_STAR``.

    Raises:
        OutOfRangeError: If s is outside [2, 2 sqrt 2].
    """
    s = _certifiable_s(s)
    return 0.5 + 0.5 * (s - S_STAR) / (TSIRELSON - S_STAR)


def measurement_fidelity_bound(s: float | SValue) -> float:
    """Minimal measurement fidelity (sqrt 2 S + 4) / 8 compatible with S.

    Raises:
        OutOfRangeError: If s is outside [2, 2 sqrt 2].
    """
    s = _certifiable_s(s)
    return (math.sqrt(2.0) * s + 4.0) / 8.0


def qubit_apparatus_fidelity(alpha: float) -> float:
    """F(alpha) = (2 + sqrt 2 cos(alpha/2) + sqrt 2 sin(alpha/2)) / 4."""
    return (
        2.0
        + math.sqrt(2.0) * math.cos(alpha / 2.0)
        + math.sqrt(2.0) * math.sin(alpha / 2.0)
    ) / 4.0


def max_s_for_alpha(alpha: float) -> float:
    """Largest CHSH value reachable when node A's bases are separated by alpha."""
    return TSIRELSON * math.sin(alpha / 2.0 + math.pi / 4.0)


def alpha_range_for_s(s: float | SValue) -> AlphaRange:
    """Separations alpha compatible with observing at least S.

    Raises:
        OutOfRangeError: If s is outside [2, 2 sqrt 2].
    """
    s = _certifiable_s(s)
    half = 2.0 * math.asin(min(s / TSIRELSON, 1.0))
    lo = max(half - math.pi / 2.0, 0.0)
    return AlphaRange(lo=lo, hi=math.pi - lo)


def ceiling_bob_angles(alpha: float) -> tuple[float, float]:
    """Bloch angles (from z, in the x-z plane) of node B's two observables
    that attain ``max_s_for_alpha`` together with |phi+> and A(alpha)."""
    # B0 and B1 are the normalized A0 + A1 and A0 - A1 directions
    return alpha / 2.0, alpha / 2.0 - math.pi / 2.0


def _observable(bloch_angle: float) -> np.ndarray:
    return math.cos(bloch_angle) * pauli("z") + math.sin(bloch_angle) * pauli("x")


def ceiling_chsh_value(alpha: float) -> float:
    """CHSH value of |phi+> with A(alpha) and ``ceiling_bob_angles(alpha)``."""
    b0, b1 = ceiling_bob_angles(alpha)
    a0 = _observable(0.0)
    a1 = _observable(alpha)
    m = (
        np.kron(a0, _observable(b0))
        + np.kron(a0, _observable(b1))
        + np.kron(a1, _observable(b0))
        - np.kron(a1, _observable(b1))
    )
    return float(np.real(PHI_PLUS.conj() @ m @ PHI_PLUS))


def fidelity_operator(alpha: float) -> np.ndarray:
    """M(alpha) = |00><00| + |11><11| + |+_a +><+_a +| + |-_a -><-_a -|."""
    plus_a, minus_a = bloch_ket(alpha)
    plus, minus = bloch_ket(math.pi / 2.0)
    zero = np.array([1, 0], dtype=complex)
    one = np.array([0, 1], dtype=complex)
    m = np.zeros((4, 4), dtype=complex)
    for u, w in ((zero, zero), (one, one), (plus_a, plus), (minus_a, minus)):
        v = np.kron(u, w)
        m += np.outer(v, v.conj())
    return m


def overlap_vectors(alpha: float) -> list[np.ndarray]:
    """The four vectors |00>, |11>, |+_a +>, |-_a -> entering the Choi overlap."""
    plus_a, minus_a = bloch_ket(alpha)
    plus, minus = bloch_ket(math.pi / 2.0)
    zero = np.array([1, 0], dtype=complex)
    one = np.array([0, 1], dtype=complex)
    return [np.kron(zero, zero), np.kron(one, one), np.kron(plus_a, plus), np.kron(minus_a, minus)]


def choi_overlaps(choi: np.ndarray, alpha: float) -> np.ndarray:
    """The four overlaps <v|C|v> for the vectors of ``overlap_vectors``."""
    return np.array(
        [float(np.real(v.conj() @ choi @ v)) for v in overlap_vectors(alpha)]
    )


def choi_overlap_fidelity(choi: np.ndarray, alpha: float) -> float:
    """Fidelity (1/16)(sum of sqrt <v|C|v>)^2 of A(alpha) composed with the
    injection whose Choi matrix is ``choi``, against the ideal apparatus."""
    overlaps = np.clip(choi_overlaps(choi, alpha), 0.0, None)
    return float(np.sum(np.sqrt(overlaps)) ** 2 / 16.0)


def dual_certificate_check(alpha: float) -> tuple[float, float]:
    """Checks the dual certificate L = (1/2)(2 + sqrt(2(1 + sin alpha))) 1.

    Returns:
        The minimum eigenvalue of 1 (x) L - M(alpha), which is nonnegative when
        L is dual feasible, and the dual value Tr(L) = 4 F(alpha).
    """
    ell = 0.5 * (2.0 + math.sqrt(2.0 * (1.0 + math.sin(alpha))))
    big_l = ell * np.eye(2, dtype=complex)
    slack = np.kron(np.eye(2, dtype=complex), big_l) - fidelity_operator(alpha)
    min_eigenvalue = float(hermitian_eigenvalues(slack)[0])
    dual_value = float(np.real(np.trace(big_l)))
    return min_eigenvalue, dual_value


def n_matrix(alpha: float) -> np.ndarray:
    """N(alpha) = 2 (M(alpha) - 1); its eigenvalues are +-sqrt(2(1 +- sin alpha))."""
    c = math.cos(alpha)
    s = math.sin(alpha)
    return np.array(
        [
            [1, c, 0, s],
            [c, -1, s, 0],
            [0, s, -1, -c],
            [s, 0, -c, 1],
        ],
        dtype=complex,
    )


def optimal_injection(alpha: float) -> InjectionMap:
    """The rotation of angle -alpha/4 + pi/8 that attains F(alpha)."""
    return InjectionMap(rotation_theta=-alpha / 4.0 + math.pi / 8.0)


def injection_fidelity(injection: InjectionMap, alpha: float) -> float:
    """Fidelity achieved by ``injection`` on A(alpha)."""
    return choi_overlap_fidelity(injection.choi_matrix(), alpha)


def random_choi_matrix(rng: np.random.Generator) -> np.ndarray:
    """A random Choi matrix of a qubit channel acting on the first factor:
    PSD with partial trace over the first factor equal to the identity."""
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    p = g @ g.conj().T
    # partial trace over the first factor
    q = np.einsum("ijik->jk", p.reshape(2, 2, 2, 2))
    w, v = np.linalg.eigh(q)
    q_inv_sqrt = v @ np.diag(w ** -0.5) @ v.conj().T
    k = np.kron(np.eye(2), q_inv_sqrt)
    return k @ p @ k.conj().T


def brute_force_apparatus_fidelity(
    alpha: float, grid_size: int = 10_000, n_random: int = 10_000, seed: int = 0
) -> float:
    """Best fidelity of A(alpha) found by scanning planar rotations on a grid
    and sampling random Choi matrices. Never exceeds F(alpha)."""
    best = 0.0
    for t in np.linspace(-math.pi / 2.0, math.pi / 2.0, grid_size):
        best = max(best, injection_fidelity(InjectionMap(float(t)), alpha))
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        best = max(best, choi_overlap_fidelity(random_choi_matrix(rng), alpha))
    return best


def max_s_over_beta(alpha: float, n_beta: int = 2000) -> float:
    """max over a beta grid on [0, pi] of the largest eigenvalue of M_{alpha,beta}."""
    return max(
        float(hermitian_eigenvalues(chsh_operator(alpha, float(beta)))[-1])
        for beta in np.linspace(0.0, math.pi, n_beta)
    )


def brute_force_min_measurement_fidelity(s: float | SValue, grid_size: int = 100_000) -> float:
    """Minimum of F(alpha) over a grid of ``alpha_range_for_s(s)``.

    Raises:
        OutOfRangeError: If s is outside [2, 2 sqrt 2].
        ValueError: If grid_size < 100.
    """
    if grid_size < 100:
        raise ValueError(f"grid_size must be at least 100, got {grid_size}")
    lo, hi = alpha_range_for_s(s)
    alphas = np.linspace(lo, hi, grid_size)
    values = (
        2.0 + math.sqrt(2.0) * np.cos(alphas / 2.0) + math.sqrt(2.0) * np.sin(alphas / 2.0)
    ) / 4.0
    return float(np.min(values))
