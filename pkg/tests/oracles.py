"""Independent reference computations used by the test-suite.

Nothing here imports the simulator; values are obtained by direct
summation, closed-form two-port arithmetic or plain brute-force sampling.
"""
import math

import numpy as np


def poisson_pmf(mu, n):
    if mu == 0:
        return float(n == 0)
    return math.exp(-mu + n * math.log(mu) - math.lgamma(n + 1))


def bose_einstein_pmf(mu, n):
    if mu == 0:
        return float(n == 0)
    return math.exp(n * math.log(mu) - (n + 1) * math.log1p(mu))


def direct_no_click(pmf, eta, n_max):
    """E[(1 - eta)**n] by truncated summation of a mass function."""
    return sum(pmf(n) * (1.0 - eta) ** n for n in range(n_max + 1))


def capture_at_least_one(pmf, reflectance, n_max=200):
    """P(a beam splitter of given reflectance diverts >= 1 photon), by summation."""
    return sum(pmf(n) * (1.0 - (1.0 - reflectance) ** n) for n in range(n_max + 1))


def two_port_probs(mean_right, eta, pd, mean_wrong=0.0):
    """Click probabilities of the right and wrong interferometer ports."""
    p_right = 1.0 - (1.0 - pd) * math.exp(-eta * mean_right)
    p_wrong = 1.0 - (1.0 - pd) * math.exp(-eta * mean_wrong)
    return p_right, p_wrong


def single_click_prob(mean_right, eta, pd):
    p_r, p_w = two_port_probs(mean_right, eta, pd)
    return p_r * (1.0 - p_w) + p_w * (1.0 - p_r)


def dark_count_qber(mean_right, eta, pd):
    """QBER of honest DPSK when only dark counts reach the wrong port."""
    p_r, p_w = two_port_probs(mean_right, eta, pd)
    wrong = p_w * (1.0 - p_r)
    return wrong / (p_r * (1.0 - p_w) + wrong)


def brute_force_rounds(p, n_bits, runs, seed):
    """Retransmission rounds: each bit needs a geometric(p) number of tries."""
    rng = np.random.default_rng(seed)
    tries = rng.geometric(p, size=(runs, n_bits))
    return tries.max(axis=1)


def binomial_sigma(p, n):
    return math.sqrt(p * (1.0 - p) / n)
