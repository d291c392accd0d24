"""Photon-number statistics and threshold-detector click probabilities.

Everything here is closed form; the Monte Carlo layers above are tested
against these functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.random import Generator
from scipy.special import gammaln

KINDS = ("coherent", "thermal", "fock", "vacuum")


def _check_mean(mu: float, name: str = "mu") -> None:
    if not mu >= 0:
        raise ValueError(f"{name} must be >= 0, got {mu!r}")


@dataclass(frozen=True)
class DetectorParams:
    """Threshold detector: efficiency and dark-count probability per gate."""

    efficiency: float = 0.1
    dark_count_prob: float = 1e-5

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency!r}")
        if not 0.0 <= self.dark_count_prob <= 1.0:
            raise ValueError(
                f"dark_count_prob must lie in [0, 1], got {self.dark_count_prob!r}"
            )


@dataclass(frozen=True)
class PhotonDistribution:
    kind: str
    mean_photons: float = 0.0
    fock_n: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        _check_mean(self.mean_photons, "mean_photons")
        if self.kind == "fock":
            if self.fock_n < 0 or int(self.fock_n) != self.fock_n:
                raise ValueError(f"fock_n must be a nonnegative integer, got {self.fock_n!r}")
            object.__setattr__(self, "mean_photons", float(self.fock_n))
        elif self.kind == "vacuum" and self.mean_photons != 0:
            raise ValueError("vacuum must have mean_photons == 0")

    @classmethod
    def coherent(cls, mu: float) -> "PhotonDistribution":
        return cls("coherent", mu)

    @classmethod
    def thermal(cls, mu: float) -> "PhotonDistribution":
        return cls("thermal", mu)

    @classmethod
    def fock(cls, n: int) -> "PhotonDistribution":
        return cls("fock", float(n), int(n))

    @classmethod
    def vacuum(cls) -> "PhotonDistribution":
        return cls("vacuum")

    def pmf(self, n):
        """Probability of ``n`` photons (scalar or array of ``n``)."""
        if self.kind == "coherent":
            return coherent_pn(self.mean_photons, n)
        if self.kind == "thermal":
            return thermal_pn(self.mean_photons, n)
        target = self.fock_n if self.kind == "fock" else 0
        out = (np.asarray(n) == target).astype(float)
        return float(out) if out.ndim == 0 else out

    def truncation(self) -> int:
        return truncation_bound(self.mean_photons, self.kind)


def truncation_bound(mean: float, kind: str = "coherent") -> int:
    """Photon-number cutoff whose tail mass and tail mean both stay below 1e-12.

    The Poisson rule ``mean + 40 sqrt(mean + 1) + 20`` is ample for coherent
    light; the geometric tail of thermal light can need more.
    """
    n = int(math.ceil(mean + 40.0 * math.sqrt(mean + 1.0))) + 20
    if kind != "thermal" or mean <= 0:
        return n
    r = mean / (1.0 + mean)
    # tail beyond N: mass r**(N+1), mean contribution (N + 1 + mean) r**(N+1)
    while (n + 1 + mean) * r ** (n + 1) > 1e-12:
        n += max(1, int(1.0 / (1.0 - r)))
    return n


def coherent_pn(mu: float, n):
    """Poisson mass ``exp(-mu) mu**n / n!``."""
    _check_mean(mu)
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("photon number must be >= 0")
    if mu == 0:
        out = (n_arr == 0).astype(float)
    else:
        out = np.exp(-mu + n_arr * math.log(mu) - gammaln(n_arr + 1.0))
    return float(out) if out.ndim == 0 else out


def thermal_pn(mu_t: float, n):
    """Bose-Einstein mass ``mu_t**n / (1 + mu_t)**(n + 1)``."""
    _check_mean(mu_t, "mu_t")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("photon number must be >= 0")
    if mu_t == 0:
        out = (n_arr == 0).astype(float)
    else:
        out = np.exp(n_arr * math.log(mu_t) - (n_arr + 1.0) * math.log1p(mu_t))
    return float(out) if out.ndim == 0 else out


def overlap_coherent_thermal(mu_c: float, mu_t: float) -> float:
    """Overlap <alpha| rho_t |alpha> for |alpha|**2 = mu_c."""
    _check_mean(mu_c, "mu_c")
    _check_mean(mu_t, "mu_t")
    return math.exp(-mu_c / (1.0 + mu_t)) / (1.0 + mu_t)


def no_click_factor(kind: str, mean, eta):
    """Probability-generating value E[(1 - eta)**n] for one component.

    Works elementwise on arrays; ``mean`` is the photon count for fock.
    """
    mean = np.asarray(mean, dtype=float)
    if kind == "coherent":
        return np.exp(-eta * mean)
    if kind == "thermal":
        return 1.0 / (1.0 + eta * mean)
    if kind == "fock":
        return np.power(1.0 - eta, mean)
    if kind == "vacuum":
        return np.ones_like(mean)
    raise ValueError(f"unknown distribution kind {kind!r}")


def click_prob(components: Iterable[PhotonDistribution], det: DetectorParams) -> float:
    """Probability that a threshold detector fires on independent components."""
    g = 1.0
    for c in components:
        g *= float(no_click_factor(c.kind, c.mean_photons, det.efficiency))
    return 1.0 - (1.0 - det.dark_count_prob) * g


def prob_at_least_two(dist: PhotonDistribution) -> float:
    return max(0.0, 1.0 - float(dist.pmf(0)) - float(dist.pmf(1)))


def pns_forward_click_prob(mu_c: float, mu_t: float, det: DetectorParams) -> float:
    """Click probability of the state Eve forwards in a photon-number-splitting attack.

    Eve keeps a pulse only when both modes hold two or more photons, so the
    monitored mode receives one photon with probability ``q`` and vacuum
    otherwise.
    """
    _check_mean(mu_c, "mu_c")
    _check_mean(mu_t, "mu_t")
    q = prob_at_least_two(PhotonDistribution.coherent(mu_c)) * prob_at_least_two(
        PhotonDistribution.thermal(mu_t)
    )
    return 1.0 - (1.0 - det.dark_count_prob) * (1.0 - det.efficiency * q)


def pns_condition_gap(mu_t: float, det: DetectorParams) -> float:
    """PNS-forwarded click rate minus the honest thermal rate at equal means."""
    honest = click_prob([PhotonDistribution.thermal(mu_t)], det)
    return pns_forward_click_prob(mu_t, mu_t, det) - honest


def sample_photons(dist: PhotonDistribution, rng: Generator, size=None):
    """Draw photon numbers from ``dist``; returns an int or an int array."""
    if dist.kind == "coherent":
        out = rng.poisson(dist.mean_photons, size=size)
    elif dist.kind == "thermal":
        # numpy's geometric counts trials to first success, starting at 1
        out = rng.geometric(1.0 / (1.0 + dist.mean_photons), size=size) - 1
    else:
        n = dist.fock_n if dist.kind == "fock" else 0
        out = np.full(size, n, dtype=np.int64) if size is not None else n
    return int(out) if size is None else np.asarray(out, dtype=np.int64)


def sample_clicks(
    components: Iterable[PhotonDistribution], det: DetectorParams, n_gates: int, rng: Generator
) -> np.ndarray:
    """Photon-level detector simulation: per-photon efficiency plus dark counts."""
    photons = np.zeros(n_gates, dtype=np.int64)
    for c in components:
        photons += sample_photons(c, rng, size=n_gates)
    detected = rng.binomial(photons, det.efficiency) > 0
    dark = rng.random(n_gates) < det.dark_count_prob
    return detected | dark
