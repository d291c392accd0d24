import math

import numpy as np
import pytest

from qmultinet.attacks import (
    AttackKind,
    EveRecord,
    apply_attack,
    beam_splitter_attack,
    beam_splitter_train,
    blinding_attack,
    eve_phase_ambiguity,
    intercept_resend,
    intercept_resend_train,
    pns_attack,
    pns_train,
)
from qmultinet.optics import DualRailPulse, ModeComponent, alice_train, detect_rail, make_alice_pulse
from qmultinet.photon_stats import DetectorParams

from oracles import binomial_sigma, bose_einstein_pmf, capture_at_least_one, poisson_pmf

coh = ModeComponent.coherent
th = ModeComponent.thermal


@pytest.mark.parametrize(
    "kwargs",
    [{"kind": "teleport"}, {"kind": "intercept_resend", "p_swap": 1.5}, {"reflectance": -0.1}, {"injected_mean": 0}],
)
def test_attack_kind_validation(kwargs):
    with pytest.raises(ValueError):
        AttackKind(**kwargs)


def test_intercept_resend_extremes():
    rng = np.random.default_rng(0)
    p = make_alice_pulse(0.1, 0)
    assert intercept_resend(p, 0.0, rng) == p
    swapped = intercept_resend(p, 1.0, rng)
    assert swapped.h == (th(0.1),) and swapped.v == (coh(0.1, 0.0),)


def test_intercept_resend_swap_fraction():
    rng = np.random.default_rng(1)
    n = 200_000
    train = alice_train(0.1, np.zeros(n, dtype=int), slot_index=np.arange(n) // 2)
    out, record = intercept_resend_train(train, 0.5, rng)
    swapped = np.zeros(n)
    for c in out.h:
        if c.kind == "thermal":
            swapped += c.mean > 0
    assert abs(swapped.mean() - 0.5) < 3 * binomial_sigma(0.5, n)
    assert record.pulses_attacked == n
    # a slot is read correctly only when neither pulse was swapped
    assert abs(record.bits_inferred / record.slots_seen - 0.25) < 4 * binomial_sigma(0.25, record.slots_seen)


def test_pns_vacuum_forwards_nothing():
    out, record = pns_attack(DualRailPulse(), np.random.default_rng(2))
    assert out.h == () and out.v == ()
    assert record.photons_captured == 0


def test_pns_keeps_one_photon_per_rail():
    rng = np.random.default_rng(3)
    out, record = pns_attack(DualRailPulse((coh(50.0, 1.0),), (th(50.0),)), rng)
    assert record.photons_captured == 2
    (h,), (v,) = out.h, out.v
    assert h.kind == v.kind == "fock"
    assert h.mean >= 1 and v.mean >= 1
    assert h.phase == pytest.approx(1.0)


def test_pns_forwarded_rate_matches_two_photon_product():
    rng = np.random.default_rng(4)
    n, mu = 1_000_000, 0.5
    out, _ = pns_train(alice_train(mu, np.zeros(n, dtype=int)), rng)
    clicks = detect_rail(out.h, DetectorParams(1.0, 0.0), rng, n)
    p_coh = 1 - poisson_pmf(mu, 0) - poisson_pmf(mu, 1)
    p_th = 1 - bose_einstein_pmf(mu, 0) - bose_einstein_pmf(mu, 1)
    q = p_coh * p_th
    assert abs(clicks.mean() - q) < 3 * binomial_sigma(q, n)


def test_beam_splitter_extremes():
    rng = np.random.default_rng(5)
    p = make_alice_pulse(0.2, 1)
    same, record = beam_splitter_attack(p, 0.0, rng)
    assert same == p and record.photons_captured == 0
    gone, _ = beam_splitter_attack(p, 1.0, rng)
    assert gone.h == () and gone.v == ()
    with pytest.raises(ValueError):
        beam_splitter_attack(p, 1.2, rng)


def test_beam_splitter_forwards_complement():
    out, _ = beam_splitter_attack(make_alice_pulse(0.2, 0), 0.25, np.random.default_rng(6))
    assert out.h[0].mean == pytest.approx(0.15)
    assert out.v[0].mean == pytest.approx(0.15)


@pytest.mark.parametrize("mu, r", [(0.5, 0.5), (1.0, 0.2)])
def test_beam_splitter_four_photon_slots(mu, r):
    rng = np.random.default_rng(7)
    n = 400_000
    bits = rng.integers(0, 2, n)
    train = alice_train(mu, bits, slot_index=np.arange(n) // 2)
    _, record = beam_splitter_train(train, r, rng)
    p_c = capture_at_least_one(lambda k: poisson_pmf(mu, k), r)
    p_t = capture_at_least_one(lambda k: bose_einstein_pmf(mu, k), r)
    target = (p_c * p_t) ** 2
    frac = record.slots_with_four_photons / record.slots_seen
    assert record.slots_seen == n // 2
    assert abs(frac - target) < 3 * binomial_sigma(target, record.slots_seen)


def test_blinding_adds_bright_light():
    out = blinding_attack(make_alice_pulse(0.1, 0), 1e6)
    assert sum(c.mean for c in out.h if c.kind == "thermal") == pytest.approx(1e6)
    assert sum(c.mean for c in out.v if c.kind == "thermal") == pytest.approx(1e6 + 0.1)
    with pytest.raises(ValueError):
        blinding_attack(make_alice_pulse(0.1, 0), 0.0)


def test_eve_phase_ambiguity():
    assert eve_phase_ambiguity(EveRecord(), 100) == 25.0


@pytest.mark.parametrize("kind", ["intercept_resend", "pns", "beam_splitter", "blinding"])
def test_attacks_are_deterministic(kind):
    attack = AttackKind(kind, reflectance=0.3)
    train = alice_train(0.4, np.random.default_rng(8).integers(0, 2, 1000))
    a, rec_a = apply_attack(train, attack, np.random.default_rng(9))
    b, rec_b = apply_attack(train, attack, np.random.default_rng(9))
    assert a.to_pulses() == b.to_pulses()
    assert rec_a == rec_b


def test_no_attack_is_identity():
    train = alice_train(0.1, [0, 1, 1])
    out, record = apply_attack(train, AttackKind(), np.random.default_rng(0))
    assert out is train and record == EveRecord()


def test_per_pulse_matches_train_form():
    pulses = [make_alice_pulse(0.3, b, i, i // 2) for i, b in enumerate([0, 1, 1, 0])]
    from qmultinet.optics import PulseTrain

    train, _ = intercept_resend_train(PulseTrain.from_pulses(pulses), 1.0, np.random.default_rng(0))
    singles = [intercept_resend(p, 1.0, np.random.default_rng(0)) for p in pulses]
    assert train.to_pulses() == singles
    assert math.isclose(sum(p.total_mean() for p in singles), 4 * 0.6)
