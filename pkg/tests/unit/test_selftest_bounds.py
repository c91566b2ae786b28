import math

import numpy as np
import pytest

from bellcert.error import OutOfRangeError
from bellcert.quantum_core import hermitian_eigenvalues
from bellcert.selftest_bounds import (
    S_LHV,
    S_STAR,
    TRIVIAL_MEASUREMENT_FIDELITY,
    TSIRELSON,
    AlphaRange,
    InjectionMap,
    SValue,
    alpha_range_for_s,
    brute_force_apparatus_fidelity,
    brute_force_min_measurement_fidelity,
    ceiling_bob_angles,
    ceiling_chsh_value,
    choi_overlap_fidelity,
    dual_certificate_check,
    fidelity_operator,
    injection_fidelity,
    max_s_for_alpha,
    max_s_over_beta,
    measurement_fidelity_bound,
    n_matrix,
    optimal_injection,
    qubit_apparatus_fidelity,
    random_choi_matrix,
    selftest_threshold,
    singlet_fidelity_bound,
)

ALPHAS = [0.0, 0.3, math.pi / 4.0, math.pi / 2.0, 2.0, math.pi]


def test_threshold_value():
    assert selftest_threshold() == S_STAR
    assert S_STAR == pytest.approx(2.105823, abs=1e-6)


def test_threshold_anchors():
    assert singlet_fidelity_bound(S_STAR) == pytest.approx(0.5, abs=1e-12)
    assert singlet_fidelity_bound(TSIRELSON) == pytest.approx(1.0, abs=1e-12)
    assert measurement_fidelity_bound(S_LHV) == pytest.approx(
        (2.0 * math.sqrt(2.0) + 4.0) / 8.0, abs=1e-12
    )
    assert measurement_fidelity_bound(TSIRELSON) == pytest.approx(1.0, abs=1e-12)
    assert TRIVIAL_MEASUREMENT_FIDELITY == pytest.approx(0.853553, abs=1e-6)


def test_bounds_at_observed_value():
    assert singlet_fidelity_bound(2.236) == pytest.approx(0.590, abs=1e-3)
    assert measurement_fidelity_bound(2.236) == pytest.approx(0.895, abs=1e-3)


def test_bounds_accept_svalue():
    assert singlet_fidelity_bound(SValue(2.5)) == singlet_fidelity_bound(2.5)


@pytest.mark.parametrize("s", [1.9, 2.9, float("nan")])
def test_bounds_reject_values_outside_range(s):
    with pytest.raises(OutOfRangeError):
        singlet_fidelity_bound(s)
    with pytest.raises(OutOfRangeError):
        measurement_fidelity_bound(s)


def test_bounds_clamp_rounding_above_tsirelson():
    assert singlet_fidelity_bound(TSIRELSON + 1e-12) == pytest.approx(1.0)


def test_svalue_rejects_super_quantum_values():
    with pytest.raises(OutOfRangeError):
        SValue(3.0)


def test_bounds_are_monotone():
    grid = np.linspace(2.0, TSIRELSON, 200)
    f_s = [singlet_fidelity_bound(s) for s in grid]
    f_m = [measurement_fidelity_bound(s) for s in grid]
    assert all(b >= a for a, b in zip(f_s, f_s[1:]))
    assert all(b >= a for a, b in zip(f_m, f_m[1:]))


def test_apparatus_fidelity_endpoints():
    assert qubit_apparatus_fidelity(math.pi / 2.0) == pytest.approx(1.0)
    assert qubit_apparatus_fidelity(0.0) == pytest.approx(TRIVIAL_MEASUREMENT_FIDELITY)
    assert qubit_apparatus_fidelity(math.pi) == pytest.approx(TRIVIAL_MEASUREMENT_FIDELITY)


def test_max_s_for_alpha():
    assert max_s_for_alpha(math.pi / 2.0) == pytest.approx(TSIRELSON)
    assert max_s_for_alpha(0.0) == pytest.approx(2.0)


def test_alpha_range():
    full = alpha_range_for_s(2.0)
    assert full.lo == pytest.approx(0.0, abs=1e-12)
    assert full.hi == pytest.approx(math.pi)
    point = alpha_range_for_s(TSIRELSON)
    assert point.lo == pytest.approx(math.pi / 2.0, abs=1e-6)
    lo, hi = alpha_range_for_s(2.5)
    assert max_s_for_alpha(lo) == pytest.approx(2.5)
    assert alpha_range_for_s(2.5).contains(math.pi / 2.0)


def test_alpha_range_must_be_symmetric():
    with pytest.raises(ValueError):
        AlphaRange(0.1, 0.2)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_ceiling_is_attained(alpha):
    b0, b1 = ceiling_bob_angles(alpha)
    assert b0 - b1 == pytest.approx(math.pi / 2.0)
    assert ceiling_chsh_value(alpha) == pytest.approx(max_s_for_alpha(alpha), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.7, math.pi / 2.0, 2.5])
def test_ceiling_over_beta(alpha):
    assert max_s_over_beta(alpha, n_beta=2001) == pytest.approx(max_s_for_alpha(alpha), abs=1e-6)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_fidelity_operator_matches_n_matrix(alpha):
    assert np.allclose(fidelity_operator(alpha), np.eye(4) + n_matrix(alpha) / 2.0)
    expected = sorted(
        [
            math.sqrt(2.0 * (1.0 + math.sin(alpha))),
            -math.sqrt(2.0 * (1.0 + math.sin(alpha))),
            math.sqrt(2.0 * (1.0 - math.sin(alpha))),
            -math.sqrt(2.0 * (1.0 - math.sin(alpha))),
        ]
    )
    assert list(hermitian_eigenvalues(n_matrix(alpha))) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("alpha", np.linspace(0.0, math.pi, 25))
def test_dual_certificate(alpha):
    min_eigenvalue, dual_value = dual_certificate_check(float(alpha))
    assert min_eigenvalue >= -1e-10
    assert dual_value / 4.0 == pytest.approx(qubit_apparatus_fidelity(float(alpha)), abs=1e-12)


@pytest.mark.parametrize("alpha", np.linspace(0.0, math.pi, 25))
def test_optimal_injection_attains_fidelity(alpha):
    alpha = float(alpha)
    injection = optimal_injection(alpha)
    assert injection_fidelity(injection, alpha) == pytest.approx(
        qubit_apparatus_fidelity(alpha), abs=1e-9
    )


def test_identity_injection_on_ideal_apparatus():
    assert injection_fidelity(InjectionMap(0.0), math.pi / 2.0) == pytest.approx(1.0)


def test_random_choi_matrix_is_a_channel():
    rng = np.random.default_rng(11)
    choi = random_choi_matrix(rng)
    assert hermitian_eigenvalues(choi)[0] >= -1e-10
    partial = np.einsum("ijik->jk", choi.reshape(2, 2, 2, 2))
    assert np.allclose(partial, np.eye(2))


@pytest.mark.parametrize("alpha", [0.0, 0.9, math.pi / 2.0, 2.6])
def test_random_injections_never_beat_optimum(alpha):
    rng = np.random.default_rng(3)
    f = qubit_apparatus_fidelity(alpha)
    for _ in range(200):
        assert choi_overlap_fidelity(random_choi_matrix(rng), alpha) <= f + 1e-12


def test_brute_force_apparatus_fidelity_approaches_optimum():
    alpha = 1.0
    best = brute_force_apparatus_fidelity(alpha, grid_size=2001, n_random=100, seed=1)
    assert best <= qubit_apparatus_fidelity(alpha) + 1e-12
    assert best == pytest.approx(qubit_apparatus_fidelity(alpha), abs=1e-5)


@pytest.mark.parametrize("s", [2.0, 2.1, 2.236, 2.5, 2.8])
def test_brute_force_bound_equivalence(s):
    assert brute_force_min_measurement_fidelity(s) == pytest.approx(
        measurement_fidelity_bound(s), abs=2e-6
    )


def test_brute_force_bound_rejects_small_grid():
    with pytest.raises(ValueError):
        brute_force_min_measurement_fidelity(2.5, grid_size=10)


@pytest.mark.parametrize("alpha", np.linspace(0.0, math.pi, 41))
def test_apparatus_fidelity_is_symmetric(alpha):
    alpha = float(alpha)
    assert qubit_apparatus_fidelity(alpha) == pytest.approx(
        qubit_apparatus_fidelity(math.pi - alpha), abs=1e-12
    )


def test_apparatus_fidelity_increases_towards_orthogonal_bases():
    grid = np.linspace(0.0, math.pi / 2.0, 401)[:-1]
    values = np.array([qubit_apparatus_fidelity(float(a)) for a in grid])
    assert np.all(np.diff(values) > 0.0)
    assert values[-1] < qubit_apparatus_fidelity(math.pi / 2.0)
