import pytest

from bellcert.error import DomainError
from bellcert.timing_verifier import (
    SPEED_OF_LIGHT,
    SpaceTimeConfig,
    light_time_budget,
    locality_margin,
)


def test_light_time_budget():
    assert light_time_budget(SPEED_OF_LIGHT) == pytest.approx(1e9)
    assert light_time_budget(32.928) == pytest.approx(109.836, abs=1e-3)
    with pytest.raises(DomainError):
        light_time_budget(0.0)


def test_observed_geometry_closes_locality():
    margin = locality_margin(SpaceTimeConfig(separation_distance=32.928, protocol_duration=106.7))
    assert margin.budget_ns == pytest.approx(109.836, abs=1e-3)
    assert margin.margin_ns == pytest.approx(3.136, abs=1e-3)
    assert margin.margin_fraction == pytest.approx(0.02855, abs=1e-4)
    assert margin.combined_sigma_ns == pytest.approx(0.30017, abs=1e-5)
    assert margin.closed


def test_margin_within_uncertainty_is_not_closed():
    margin = locality_margin(SpaceTimeConfig(separation_distance=32.928, protocol_duration=109.5))
    assert margin.margin_ns > 0.0
    assert not margin.closed


def test_overlong_protocol_is_not_closed():
    margin = locality_margin(SpaceTimeConfig(separation_distance=10.0, protocol_duration=50.0))
    assert margin.margin_ns < 0.0
    assert not margin.closed


def test_zero_uncertainty_needs_positive_margin():
    cfg = SpaceTimeConfig(32.928, 106.7, distance_sigma=0.0, duration_sigma=0.0)
    assert locality_margin(cfg).closed


def test_config_validation():
    with pytest.raises(DomainError):
        SpaceTimeConfig(separation_distance=-1.0, protocol_duration=10.0)
    with pytest.raises(DomainError):
        SpaceTimeConfig(separation_distance=1.0, protocol_duration=-10.0)
    with pytest.raises(DomainError):
        SpaceTimeConfig(1.0, 1.0, k_sigma=-1.0)


def test_margin_dict():
    d = locality_margin(SpaceTimeConfig(32.928, 106.7)).to_dict()
    assert set(d) == {"budget_ns", "margin_ns", "closed", "margin_fraction", "combined_sigma_ns"}
