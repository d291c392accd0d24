"""Alice's surveillance of the thermal output.

The avalanche rate (clicks per gate) stands in for the RF power a spectrum
analyser would read; the decision is a two-sided normal test of the
observed binomial rate against the rate Alice predicts from her secret
mean photon number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .photon_stats import DetectorParams, PhotonDistribution, click_prob


class UndefinedRateError(ValueError):
    pass


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class DetectionStats:
    gates: int = 0
    clicks: int = 0

    def __post_init__(self):
        if self.gates < 0 or self.clicks < 0:
            raise ValueError("gates and clicks must be nonnegative")
        if self.clicks > self.gates:
            raise ValueError(f"clicks ({self.clicks}) exceed gates ({self.gates})")

    def __add__(self, other: "DetectionStats") -> "DetectionStats":
        return DetectionStats(self.gates + other.gates, self.clicks + other.clicks)

    @property
    def rate(self) -> float:
        return power_proxy(self)


@dataclass(frozen=True)
class MonitorConfig:
    z_threshold: float = 5.0
    min_gates: int = 10_000

    def __post_init__(self):
        if not self.z_threshold > 0:
            raise ValueError(f"monitor.z_threshold must be > 0, got {self.z_threshold!r}")
        if not self.min_gates >= 1:
            raise ValueError(f"monitor.min_gates must be >= 1, got {self.min_gates!r}")


def expected_thermal_rate(mu_t: float, det: DetectorParams) -> float:
    return click_prob([PhotonDistribution.thermal(mu_t)], det)


def power_proxy(stats: DetectionStats) -> float:
    if stats.gates == 0:
        raise UndefinedRateError("rate is undefined for zero gates")
    return stats.clicks / stats.gates


def z_score(stats: DetectionStats, expected: float) -> float:
    """Standardised deviation of the observed rate from ``expected``."""
    deviation = power_proxy(stats) - expected
    sigma = math.sqrt(expected * (1.0 - expected) / stats.gates)
    if sigma == 0.0:
        if deviation == 0.0:
            return 0.0
        return math.copysign(math.inf, deviation)
    return deviation / sigma


def alarm(stats: DetectionStats, expected: float, cfg: MonitorConfig = MonitorConfig()) -> bool:
    if stats.gates < cfg.min_gates:
        raise InsufficientDataError(
            f"{stats.gates} gates collected, monitor needs at least {cfg.min_gates}"
        )
    return abs(z_score(stats, expected)) > cfg.z_threshold


def false_alarm_probability(cfg: MonitorConfig = MonitorConfig()) -> float:
    """Two-sided normal tail beyond the threshold (large-sample limit)."""
    return math.erfc(cfg.z_threshold / math.sqrt(2.0))
