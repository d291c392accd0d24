import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmultinet.monitor import (
    DetectionStats,
    InsufficientDataError,
    MonitorConfig,
    UndefinedRateError,
    alarm,
    expected_thermal_rate,
    false_alarm_probability,
    power_proxy,
    z_score,
)
from qmultinet.photon_stats import DetectorParams

from oracles import binomial_sigma


def test_expected_rate_examples():
    assert expected_thermal_rate(0.1, DetectorParams(1.0, 0.0)) == pytest.approx(0.1 / 1.1)
    assert expected_thermal_rate(0.0, DetectorParams(0.3, 1e-3)) == pytest.approx(1e-3)
    # threshold detector: 1 - (1 - pd) / (1 + eta mu)
    assert expected_thermal_rate(0.1, DetectorParams(0.1, 1e-5)) == pytest.approx(
        1 - (1 - 1e-5) / 1.01, rel=1e-12
    )


def test_power_proxy():
    assert power_proxy(DetectionStats(1000, 91)) == pytest.approx(0.091)
    with pytest.raises(UndefinedRateError):
        power_proxy(DetectionStats(0, 0))


def test_stats_validation_and_sum():
    with pytest.raises(ValueError):
        DetectionStats(10, 11)
    with pytest.raises(ValueError):
        DetectionStats(-1, 0)
    assert DetectionStats(10, 3) + DetectionStats(5, 1) == DetectionStats(15, 4)


def test_z_score_matches_binomial_formula():
    stats = DetectionStats(1_000_000, 92_000)
    expected = 0.1 / 1.1
    z = (0.092 - expected) / binomial_sigma(expected, stats.gates)
    assert z_score(stats, expected) == pytest.approx(z, rel=1e-12)


def test_z_score_degenerate_expectation():
    assert z_score(DetectionStats(100, 0), 0.0) == 0.0
    assert z_score(DetectionStats(100, 1), 0.0) == math.inf
    assert z_score(DetectionStats(100, 99), 1.0) == -math.inf


def test_alarm_thresholds():
    cfg = MonitorConfig(z_threshold=5.0, min_gates=10_000)
    expected = 0.5
    sigma = binomial_sigma(expected, 40_000)
    near = DetectionStats(40_000, int(40_000 * (expected + 4 * sigma)))
    far = DetectionStats(40_000, int(40_000 * (expected + 6 * sigma)))
    assert not alarm(near, expected, cfg)
    assert alarm(far, expected, cfg)
    below = DetectionStats(40_000, int(40_000 * (expected - 6 * sigma)))
    assert alarm(below, expected, cfg)


def test_alarm_needs_enough_gates():
    with pytest.raises(InsufficientDataError):
        alarm(DetectionStats(9_999, 900), 0.09, MonitorConfig(min_gates=10_000))


@pytest.mark.parametrize("bad", [{"z_threshold": 0.0}, {"z_threshold": -1.0}, {"min_gates": 0}])
def test_monitor_config_validation(bad):
    with pytest.raises(ValueError):
        MonitorConfig(**bad)


def test_false_alarm_probability():
    assert false_alarm_probability(MonitorConfig(z_threshold=1.959963984540054)) == pytest.approx(0.05)
    assert false_alarm_probability() == pytest.approx(5.733e-7, rel=1e-3)


def test_empirical_false_alarm_at_low_threshold():
    cfg = MonitorConfig(z_threshold=2.0, min_gates=10_000)
    rng = np.random.default_rng(21)
    p, gates, runs = 0.09, 20_000, 4_000
    alarms = [alarm(DetectionStats(gates, int(rng.binomial(gates, p))), p, cfg) for _ in range(runs)]
    target = false_alarm_probability(cfg)
    assert abs(np.mean(alarms) - target) < 4 * binomial_sigma(target, runs)


@settings(max_examples=100, deadline=None)
@given(gates=st.integers(1, 10**7), frac=st.floats(0, 1), expected=st.floats(0.001, 0.999))
def test_z_score_sign_follows_deviation(gates, frac, expected):
    stats = DetectionStats(gates, int(frac * gates))
    z = z_score(stats, expected)
    assert np.sign(z) == np.sign(stats.rate - expected)
