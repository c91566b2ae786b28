"""Finite-statistics certification of a Bell test.

This module frames the CHSH test as a game won when x AND y = a XOR b, counts
wins, and lower bounds the average winning probability over n trials at a
given confidence without assuming the trials are independent or identically
distributed. The bound maps to a corrected CHSH value S = 8p - 4 and then to
certified state and measurement fidelities.

The confidence residual 1 - conf_level is called ``alpha_res`` here so it is
never confused with the measurement angle alpha.

**Usage:**
```python
tally = TrialTally(n=2**24, c=13_077_840)
result = certify(tally, conf_level=0.99)
print(result.f_state, result.f_measurement)
```
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize, special

from .error import DomainError, NoConvergenceError, OutOfRangeError
from .selftest_bounds import (
    S_LHV,
    S_STAR,
    TRIVIAL_MEASUREMENT_FIDELITY,
    measurement_fidelity_bound,
    singlet_fidelity_bound,
)

_INVERSE_MAX_ITER = 200


@dataclass(frozen=True)
class TrialTally:
    """Number of trials n and number of won rounds c.

    Attributes:
        n: Trial count, at least 1.
        c: Win count in [0, n].
    """

    n: int
    c: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DomainError(f"n must be at least 1, got {self.n}")
        if not 0 <= self.c <= self.n:
            raise DomainError(f"c must lie in [0, n], got c={self.c}, n={self.n}")

    def __add__(self, other: "TrialTally") -> "TrialTally":
        return TrialTally(n=self.n + other.n, c=self.c + other.c)

    @property
    def win_fraction(self) -> float:
        return self.c / self.n

    @property
    def s_value(self) -> float:
        """Observed CHSH value 8 c / n - 4."""
        return 8.0 * self.c / self.n - 4.0

    @classmethod
    def from_s(cls, n: int, s: float) -> "TrialTally":
        """Tally with c = round(n (4 + S) / 8)."""
        return cls(n=n, c=int(round(n * (4.0 + s) / 8.0)))


@dataclass(frozen=True)
class ConfidenceBound:
    """One-sided lower confidence bound on the average winning probability.

    Attributes:
        conf_level: Confidence 1 - alpha_res, in (0, 1).
        p_lower: Lower bound on the average winning probability.
        s_lower: The corresponding CHSH value 8 p_lower - 4.
    """

    conf_level: float
    p_lower: float
    s_lower: float


@dataclass(frozen=True)
class CertificationResult:
    """Certified fidelities for a tally.

    When ``state_trivial`` is set, s_lower did not exceed S* and f_state is the
    trivial value 1/2. When ``measurement_trivial`` is set, s_lower was below 2
    and f_measurement is the trivial value (2 sqrt 2 + 4) / 8.
    """

    tally: TrialTally
    s_measured: float
    bound: ConfidenceBound
    f_state: float
    f_measurement: float
    state_trivial: bool
    measurement_trivial: bool

    def to_dict(self) -> dict:
        """Flat dictionary for JSON or CSV rendering."""
        return {
            "n": self.tally.n,
            "c": self.tally.c,
            "s_measured": self.s_measured,
            "conf_level": self.bound.conf_level,
            "p_lower": self.bound.p_lower,
            "s_lower": self.bound.s_lower,
            "f_state": self.f_state,
            "f_measurement": self.f_measurement,
            "state_trivial": self.state_trivial,
            "measurement_trivial": self.measurement_trivial,
        }


def win_condition(x: int, y: int, a: int, b: int) -> bool:
    """A round is won iff x AND y == a XOR b."""
    return (x & y) == (a ^ b)


def count_wins(x: np.ndarray, y: np.ndarray, a: np.ndarray, b: np.ndarray) -> int:
    """Vectorized number of won rounds."""
    return int(np.count_nonzero((np.asarray(x) & np.asarray(y)) == (np.asarray(a) ^ np.asarray(b))))


def reg_inc_beta(p: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_p(a, b).

    Raises:
        DomainError: If p is outside [0, 1] or a, b are not positive.
    """
    if not 0.0 <= p <= 1.0 or not a > 0.0 or not b > 0.0:
        raise DomainError(f"I_p(a, b) undefined for p={p}, a={a}, b={b}")
    return float(special.betainc(a, b, p))


def reg_inc_beta_inv(target: float, a: float, b: float) -> float:
    """The p in [0, 1] with I_p(a, b) = target, found by bisection.

    The root is located to a few ulps of p. For moderate a and b this
    leaves |I_p - target| below 1e-12; at a, b near 1e7 the residual is
    limited by double-precision evaluation of I_p and reaches about 1e-12.

    Raises:
        DomainError: If target is outside (0, 1) or a, b are not positive.
        NoConvergenceError: If bisection does not converge in 200 iterations.
    """
    if not 0.0 < target < 1.0 or not a > 0.0 or not b > 0.0:
        raise DomainError(f"I^-1 undefined for target={target}, a={a}, b={b}")

    def residual(p: float) -> float:
        return float(special.betainc(a, b, p)) - target

    try:
        return float(
            optimize.bisect(residual, 0.0, 1.0, xtol=1e-17, maxiter=_INVERSE_MAX_ITER)
        )
    except RuntimeError as e:
        raise NoConvergenceError(
            f"I^-1_{target}({a}, {b}) did not converge in {_INVERSE_MAX_ITER} iterations"
        ) from e


def _check_conf_level(conf_level: float) -> float:
    if not 0.0 < conf_level < 1.0:
        raise DomainError(f"conf_level must lie in (0, 1), got {conf_level}")
    return 1.0 - conf_level


def alpha_star(tally: TrialTally) -> float:
    """alpha* = I_{(c-1)/n}(c, n - c + 1), the residual at which the bound switches branch."""
    if tally.c == 0:
        return 0.0
    return reg_inc_beta((tally.c - 1) / tally.n, tally.c, tally.n - tally.c + 1)


def p_avg_lower_bound(tally: TrialTally, conf_level: float) -> float:
    """Lower bound on the average winning probability of n possibly dependent
    trials with c wins, holding with probability at least ``conf_level``.

    Raises:
        DomainError: If conf_level is outside (0, 1).
    """
    alpha_res = _check_conf_level(conf_level)
    n, c = tally.n, tally.c
    if c == 0:
        return 0.0
    a_star = alpha_star(tally)
    if alpha_res <= a_star:
        p = reg_inc_beta_inv(alpha_res, c, n - c + 1)
    else:
        p = (c - (1.0 - alpha_res) / (1.0 - a_star)) / n
    return min(max(p, 0.0), c / n)


def s_avg_lower_bound(tally: TrialTally, conf_level: float) -> ConfidenceBound:
    """Wraps ``p_avg_lower_bound`` with S = 8 p - 4."""
    p = p_avg_lower_bound(tally, conf_level)
    return ConfidenceBound(conf_level=conf_level, p_lower=p, s_lower=8.0 * p - 4.0)


def _fidelities(s_lower: float) -> tuple[float, float, bool, bool]:
    if s_lower > S_STAR:
        f_state, state_trivial = singlet_fidelity_bound(s_lower), False
    else:
        f_state, state_trivial = 0.5, True
    if s_lower >= S_LHV:
        f_meas, meas_trivial = measurement_fidelity_bound(s_lower), False
    else:
        f_meas, meas_trivial = TRIVIAL_MEASUREMENT_FIDELITY, True
    return f_state, f_meas, state_trivial, meas_trivial


def certify(tally: TrialTally, conf_level: float) -> CertificationResult:
    """Certified state and measurement fidelities at ``conf_level``.

    Degraded certificates are flagged through ``state_trivial`` and
    ``measurement_trivial`` rather than raised.
    """
    bound = s_avg_lower_bound(tally, conf_level)
    f_state, f_meas, state_trivial, meas_trivial = _fidelities(bound.s_lower)
    return CertificationResult(
        tally=tally,
        s_measured=tally.s_value,
        bound=bound,
        f_state=f_state,
        f_measurement=f_meas,
        state_trivial=state_trivial,
        measurement_trivial=meas_trivial,
    )


@dataclass(frozen=True)
class FiniteSizeRow:
    """One cell of the finite-size table."""

    s: float
    n: float
    c: int
    s_lower: float
    f_state: float
    f_measurement: float

    def to_dict(self) -> dict:
        return asdict(self)


def finite_size_table(
    s_values: list[float], n_values: list[float], conf_level: float
) -> list[FiniteSizeRow]:
    """Certified fidelities for every (S, n), assuming c = round(n (4 + S) / 8).

    An n of ``math.inf`` gives the uncorrected limit. Along n the certified
    fidelities grow on grids whose steps are coarse compared with the
    rounding of c, such as the powers of two used by default; between
    nearby n the rounding makes c / n jitter and they can dip slightly.

    Raises:
        ValueError: If either grid is empty.
        DomainError: If conf_level is outside (0, 1).
    """
    if len(s_values) == 0 or len(n_values) == 0:
        raise ValueError("finite_size_table needs nonempty S and n grids")
    _check_conf_level(conf_level)
    rows: list[FiniteSizeRow] = []
    for s in s_values:
        for n in n_values:
            if math.isinf(n):
                c, s_lower = -1, float(s)
            else:
                tally = TrialTally.from_s(int(n), float(s))
                c, s_lower = tally.c, s_avg_lower_bound(tally, conf_level).s_lower
            f_state, f_meas, _, _ = _fidelities(s_lower)
            rows.append(FiniteSizeRow(float(s), n, c, s_lower, f_state, f_meas))
    return rows


def _log_binomial_tail(n: int, c: int, p: float) -> float:
    """log P(Binomial(n, p) >= c) by log-space summation of the pmf."""
    if c <= 0:
        return 0.0
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return 0.0
    k = np.arange(c, n + 1, dtype=float)
    log_pmf = (
        special.gammaln(n + 1)
        - special.gammaln(k + 1)
        - special.gammaln(n - k + 1)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )
    return float(special.logsumexp(log_pmf))


def binomial_tail_lower_bound(tally: TrialTally, conf_level: float) -> float:
    """Same bound as ``p_avg_lower_bound`` computed from exact binomial tails
    instead of the incomplete beta function. Used as an oracle."""
    alpha_res = _check_conf_level(conf_level)
    n, c = tally.n, tally.c
    if c == 0:
        return 0.0
    a_star = math.exp(_log_binomial_tail(n, c, (c - 1) / n)) if c > 1 else 0.0
    if alpha_res <= a_star:
        log_target = math.log(alpha_res)
        p = optimize.bisect(
            lambda q: _log_binomial_tail(n, c, q) - log_target,
            0.0,
            1.0,
            xtol=1e-15,
            maxiter=_INVERSE_MAX_ITER,
        )
    else:
        p = (c - (1.0 - alpha_res) / (1.0 - a_star)) / n
    return min(max(float(p), 0.0), c / n)


def selftest_feasible(s: float, n: int, conf_level: float) -> bool:
    """True when the finite-size corrected CHSH value of n trials at observed
    S still exceeds S*, so a nontrivial state self-test is possible."""
    tally = TrialTally.from_s(n, s)
    return s_avg_lower_bound(tally, conf_level).s_lower > S_STAR


def min_trials_for_selftest(s: float, conf_level: float, n_max: int = 2**62) -> int:
    """Smallest n with ``selftest_feasible(s, n, conf_level)``.

    Raises:
        OutOfRangeError: If s <= S*, where no n suffices.
        NoConvergenceError: If no n up to n_max suffices.
    """
    if s <= S_STAR:
        raise OutOfRangeError(f"S = {s} does not exceed S* = {S_STAR:.6f}")
    hi = 16
    while not selftest_feasible(s, hi, conf_level):
        hi *= 2
        if hi > n_max:
            raise NoConvergenceError(f"No trial count up to {n_max} certifies S = {s}")
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if selftest_feasible(s, mid, conf_level):
            hi = mid
        else:
            lo = mid
    return hi
