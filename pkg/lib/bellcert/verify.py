"""Oracle cross-checks of the certification toolkit.

Every closed-form bound is compared against an independent computation:
the incomplete-beta confidence bound against exact binomial tails, the
apparatus fidelity against its dual certificate and an explicit injection,
the CHSH ceiling against eigenvalues of the CHSH operator, and the
measurement fidelity bound against a grid minimization. A clean build passes
all of them.

**Usage:**
```python
results = run_checks(logger)
ok = all(r.passed for r in results)
```
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .finite_stats import TrialTally, binomial_tail_lower_bound, p_avg_lower_bound
from .logger import Logger, null_logger
from .quantum_core import (
    chsh_operator,
    hermitian_eigenvalues,
    random_density_matrix,
    trace_distance,
)
from .selftest_bounds import (
    S_LHV,
    S_STAR,
    TSIRELSON,
    brute_force_apparatus_fidelity,
    brute_force_min_measurement_fidelity,
    dual_certificate_check,
    injection_fidelity,
    max_s_for_alpha,
    max_s_over_beta,
    measurement_fidelity_bound,
    optimal_injection,
    qubit_apparatus_fidelity,
    singlet_fidelity_bound,
)
from .simulator.model import NoiseModel
from .simulator.trial_simulator import expected_s
from .timing_verifier import SpaceTimeConfig, locality_margin
from .tomography import (
    ConfusionMatrix,
    exact_tomography_probs,
    reconstruct_state,
    tomographic_measurement_fidelity,
)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one cross-check.

    Attributes:
        name: Short identifier.
        passed: Whether the deviation stayed within tolerance.
        deviation: Largest deviation observed.
        tolerance: Allowed deviation.
    """

    name: str
    passed: bool
    deviation: float
    tolerance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
        }


def _result(name: str, deviation: float, tolerance: float) -> CheckResult:
    return CheckResult(name, bool(deviation <= tolerance), float(deviation), tolerance)


def check_threshold_anchors() -> CheckResult:
    deviation = max(
        abs(singlet_fidelity_bound(S_STAR) - 0.5),
        abs(singlet_fidelity_bound(TSIRELSON) - 1.0),
        abs(measurement_fidelity_bound(S_LHV) - (2.0 * math.sqrt(2.0) + 4.0) / 8.0),
        abs(measurement_fidelity_bound(TSIRELSON) - 1.0),
    )
    return _result("threshold_anchors", deviation, 1e-12)


def check_finite_size_oracle(n_cases: int = 100, seed: int = 1) -> CheckResult:
    rng = np.random.default_rng(seed)
    deviation = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(1, 5001))
        c = int(rng.integers(0, n + 1))
        conf = float(rng.uniform(0.5, 0.999))
        tally = TrialTally(n, c)
        deviation = max(
            deviation,
            abs(p_avg_lower_bound(tally, conf) - binomial_tail_lower_bound(tally, conf)),
        )
    return _result("finite_size_oracle", deviation, 1e-9)


def check_dual_certificate(n_alpha: int = 1000) -> CheckResult:
    deviation = 0.0
    for alpha in np.linspace(0.0, math.pi, n_alpha):
        alpha = float(alpha)
        f = qubit_apparatus_fidelity(alpha)
        min_eigenvalue, dual_value = dual_certificate_check(alpha)
        deviation = max(
            deviation,
            max(-min_eigenvalue - 1e-10, 0.0),
            abs(dual_value / 4.0 - f),
        )
    return _result("dual_certificate", deviation, 1e-12)


def check_optimal_injection(n_alpha: int = 1000) -> CheckResult:
    alphas = [float(a) for a in np.linspace(0.0, math.pi, n_alpha)]
    deviation = max(
        abs(injection_fidelity(optimal_injection(a), a) - qubit_apparatus_fidelity(a))
        for a in alphas
    )
    return _result("optimal_injection", deviation, 1e-9)


def check_adversarial_injections(n_alpha: int = 5, n_random: int = 500) -> CheckResult:
    """No sampled injection beats F(alpha)."""
    excess = 0.0
    for i, alpha in enumerate(np.linspace(0.0, math.pi, n_alpha)):
        alpha = float(alpha)
        best = brute_force_apparatus_fidelity(alpha, grid_size=500, n_random=n_random, seed=i)
        excess = max(excess, best - qubit_apparatus_fidelity(alpha))
    return _result("adversarial_injections", max(excess, 0.0), 1e-12)


def check_chsh_ceiling(n_grid: int = 200) -> CheckResult:
    deviation = 0.0
    grid = np.linspace(0.0, math.pi, n_grid)
    for alpha in grid:
        for beta in grid:
            top = hermitian_eigenvalues(chsh_operator(float(alpha), float(beta)))[-1]
            expected = 2.0 * math.sqrt(1.0 + math.sin(alpha) * math.sin(beta))
            deviation = max(deviation, abs(top - expected))
    return _result("chsh_ceiling", deviation, 1e-10)


def check_ceiling_over_beta(n_alpha: int = 25) -> CheckResult:
    deviation = max(
        abs(max_s_over_beta(float(a), n_beta=2001) - max_s_for_alpha(float(a)))
        for a in np.linspace(0.0, math.pi, n_alpha)
    )
    return _result("ceiling_over_beta", deviation, 1e-6)


def check_bound_equivalence(n_cases: int = 50, seed: int = 2) -> CheckResult:
    rng = np.random.default_rng(seed)
    deviation = max(
        abs(brute_force_min_measurement_fidelity(s) - measurement_fidelity_bound(s))
        for s in rng.uniform(S_LHV, TSIRELSON, n_cases)
    )
    return _result("bound_equivalence", deviation, 2e-6)


def check_tomography_inversion(n_states: int = 20, seed: int = 3) -> CheckResult:
    rng = np.random.default_rng(seed)
    confusion = (ConfusionMatrix(0.004, 0.007), ConfusionMatrix(0.010, 0.018))
    deviation = 0.0
    for _ in range(n_states):
        rho = random_density_matrix(rng)
        plain = reconstruct_state(exact_tomography_probs(rho))
        corrected = reconstruct_state(exact_tomography_probs(rho, confusion), True, confusion)
        deviation = max(deviation, trace_distance(rho, plain), trace_distance(rho, corrected))
    return _result("tomography_inversion", deviation, 1e-9)


def check_measurement_fidelity_bound() -> CheckResult:
    deviation = abs(tomographic_measurement_fidelity(0.0025, 0.014) - 0.972)
    return _result("measurement_fidelity_bound", deviation, 5e-4)


def check_locality_margin() -> CheckResult:
    margin = locality_margin(SpaceTimeConfig(separation_distance=32.928, protocol_duration=106.7))
    deviation = max(
        abs(margin.budget_ns - 109.84) - 0.01, abs(margin.margin_ns - 3.1) - 0.05, 0.0
    )
    if not margin.closed:
        deviation = math.inf
    return _result("locality_margin", deviation, 0.0)


def check_simulator_model() -> CheckResult:
    deviation = max(
        abs(expected_s(NoiseModel()) - TSIRELSON),
        abs(expected_s(NoiseModel(bell_fidelity=0.25))),
    )
    return _result("simulator_model", deviation, 1e-12)


CHECKS: list[Callable[[], CheckResult]] = [
    check_threshold_anchors,
    check_finite_size_oracle,
    check_dual_certificate,
    check_optimal_injection,
    check_adversarial_injections,
    check_chsh_ceiling,
    check_ceiling_over_beta,
    check_bound_equivalence,
    check_tomography_inversion,
    check_measurement_fidelity_bound,
    check_locality_margin,
    check_simulator_model,
]


def run_checks(logger: Logger | None = None) -> list[CheckResult]:
    """Runs every cross-check and logs each outcome."""
    logger = logger or null_logger()
    logger.info("Starting verification", checks=len(CHECKS))
    results = []
    for check in CHECKS:
        result = check()
        results.append(result)
        if result.passed:
            logger.debug("Check passed", **result.to_dict())
        else:
            logger.warning("Check failed", **result.to_dict())
    logger.info(
        "Verification finished",
        passed=sum(r.passed for r in results),
        failed=sum(not r.passed for r in results),
    )
    return results
