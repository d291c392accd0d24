"""Eavesdropper models acting on in-flight pulses.

Each attack exists in a train form (used by the protocols) and a per-pulse
form. All of them are pure functions of their inputs and the generator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator

from .optics import Column, DualRailPulse, PulseTrain, inject

ATTACK_KINDS = ("none", "intercept_resend", "pns", "beam_splitter", "blinding")


@dataclass(frozen=True)
class AttackKind:
    kind: str = "none"
    p_swap: float = 0.5
    reflectance: float = 0.0
    injected_mean: float = 1e6

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"attack.kind must be one of {ATTACK_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.p_swap <= 1.0:
            raise ValueError(f"attack.p_swap must lie in [0, 1], got {self.p_swap!r}")
        if not 0.0 <= self.reflectance <= 1.0:
            raise ValueError(f"attack.reflectance must lie in [0, 1], got {self.reflectance!r}")
        if not self.injected_mean > 0:
            raise ValueError(f"attack.injected_mean must be > 0, got {self.injected_mean!r}")


@dataclass
class EveRecord:
    pulses_attacked: int = 0
    photons_captured: int = 0
    phase_candidates_per_slot: int = 4
    bits_inferred: int = 0
    slots_with_four_photons: int = 0
    slots_seen: int = 0

    def absorb(self, other: "EveRecord") -> None:
        self.pulses_attacked += other.pulses_attacked
        self.photons_captured += other.photons_captured
        self.bits_inferred += other.bits_inferred
        self.slots_with_four_photons += other.slots_with_four_photons
        self.slots_seen += other.slots_seen


def _complete_slots(flag: np.ndarray, slot_index: np.ndarray) -> tuple[int, int]:
    """(slots whose every pulse has ``flag``, slots with two or more pulses)."""
    if flag.size == 0:
        return 0, 0
    counts = np.bincount(slot_index)
    hits = np.bincount(slot_index, weights=flag, minlength=counts.size)
    paired = counts >= 2
    return int(np.sum(paired & (hits == counts))), int(np.sum(paired))


def _sample_rail(rail, rng: Generator, n: int) -> np.ndarray:
    photons = np.zeros(n, dtype=np.int64)
    for c in rail:
        if c.kind == "coherent":
            photons += rng.poisson(c.mean)
        elif c.kind == "thermal":
            photons += rng.geometric(1.0 / (1.0 + c.mean)) - 1
        else:
            photons += rng.binomial(c.mean.astype(np.int64), c.share)
    return photons


def _coherent_phase(train: PulseTrain) -> np.ndarray:
    """Phase of the strongest coherent component of each pulse, either rail."""
    n = len(train)
    best = np.zeros(n)
    phase = np.zeros(n)
    for c in train.h + train.v:
        if c.kind != "coherent":
            continue
        stronger = c.mean > best
        best = np.where(stronger, c.mean, best)
        phase = np.where(stronger, c.phase, phase)
    return phase


def intercept_resend_train(train: PulseTrain, p_swap: float, rng: Generator):
    """Eve re-prepares every pulse and, with probability ``p_swap``, exchanges rails.

    She is granted Alice's mean photon number and Bob's phase, so an
    unconfused resend is an exact copy of the intercepted state.
    """
    n = len(train)
    swap = rng.random(n) < p_swap
    keep = (~swap).astype(float)
    flip = swap.astype(float)
    h = [c.scaled(keep) for c in train.h] + [c.scaled(flip) for c in train.v]
    v = [c.scaled(keep) for c in train.v] + [c.scaled(flip) for c in train.h]
    good, seen = _complete_slots(~swap, train.slot_index)
    record = EveRecord(pulses_attacked=n, bits_inferred=good, slots_seen=seen)
    return train.with_rails(h, v), record


def pns_train(train: PulseTrain, rng: Generator):
    """Photon-number splitting on both rails with a lossless line to Alice.

    A pulse survives only when both rails hold at least two photons; Eve
    keeps one photon per rail and forwards the remainder as number states
    tagged with the coherent phase. Anything else is replaced by vacuum.
    """
    n = len(train)
    n_h = _sample_rail(train.h, rng, n)
    n_v = _sample_rail(train.v, rng, n)
    ok = (n_h >= 2) & (n_v >= 2)
    phase = _coherent_phase(train)
    h = [Column("fock", np.where(ok, n_h - 1, 0).astype(float), phase)]
    v = [Column("fock", np.where(ok, n_v - 1, 0).astype(float), phase)]
    four, seen = _complete_slots(ok, train.slot_index)
    record = EveRecord(
        pulses_attacked=n,
        photons_captured=2 * int(ok.sum()),
        bits_inferred=four,
        slots_with_four_photons=four,
        slots_seen=seen,
    )
    return train.with_rails(h, v), record


def _split_rail(rail, reflectance: float, rng: Generator, n: int):
    forwarded = []
    captured = np.zeros(n, dtype=np.int64)
    for c in rail:
        if c.kind == "fock":
            taken = rng.binomial(c.mean.astype(np.int64), reflectance)
            captured += taken
            forwarded.append(Column("fock", c.mean - taken, c.phase, c.share))
        else:
            tap = c.scaled(reflectance)
            captured += _sample_rail([tap], rng, n)
            forwarded.append(c.scaled(1.0 - reflectance))
    return forwarded, captured


def beam_splitter_train(train: PulseTrain, reflectance: float, rng: Generator):
    """Tap a fraction ``reflectance`` of every component; forward the rest losslessly."""
    if not 0.0 <= reflectance <= 1.0:
        raise ValueError(f"reflectance must lie in [0, 1], got {reflectance!r}")
    n = len(train)
    h, cap_h = _split_rail(train.h, reflectance, rng, n)
    v, cap_v = _split_rail(train.v, reflectance, rng, n)
    both = (cap_h >= 1) & (cap_v >= 1)
    four, seen = _complete_slots(both, train.slot_index)
    record = EveRecord(
        pulses_attacked=n,
        photons_captured=int(cap_h.sum() + cap_v.sum()),
        bits_inferred=four,
        slots_with_four_photons=four,
        slots_seen=seen,
    )
    return train.with_rails(h, v), record


def blinding_train(train: PulseTrain, injected_mean: float) -> PulseTrain:
    if not injected_mean > 0:
        raise ValueError(f"injected_mean must be > 0, got {injected_mean!r}")
    bright = np.full(len(train), float(injected_mean))
    return PulseTrain(
        inject(train.h, Column("thermal", bright)),
        inject(train.v, Column("thermal", bright)),
        train.pulse_index,
        train.slot_index,
    )


def apply_attack(train: PulseTrain, attack: AttackKind, rng: Generator):
    """Dispatch on ``attack.kind``; returns the forwarded train and Eve's record."""
    if attack.kind == "intercept_resend":
        return intercept_resend_train(train, attack.p_swap, rng)
    if attack.kind == "pns":
        return pns_train(train, rng)
    if attack.kind == "beam_splitter":
        return beam_splitter_train(train, attack.reflectance, rng)
    if attack.kind == "blinding":
        return blinding_train(train, attack.injected_mean), EveRecord(pulses_attacked=len(train))
    return train, EveRecord()


# per-pulse forms


def _one(pulse: DualRailPulse) -> PulseTrain:
    return PulseTrain.from_pulses([pulse])


def intercept_resend(pulse: DualRailPulse, p_swap: float, rng: Generator) -> DualRailPulse:
    train, _ = intercept_resend_train(_one(pulse), p_swap, rng)
    return train.to_pulses()[0]


def pns_attack(pulse: DualRailPulse, rng: Generator) -> tuple[DualRailPulse, EveRecord]:
    train, record = pns_train(_one(pulse), rng)
    return train.to_pulses()[0], record


def beam_splitter_attack(
    pulse: DualRailPulse, reflectance: float, rng: Generator
) -> tuple[DualRailPulse, EveRecord]:
    train, record = beam_splitter_train(_one(pulse), reflectance, rng)
    return train.to_pulses()[0], record


def blinding_attack(pulse: DualRailPulse, injected_mean: float) -> DualRailPulse:
    return blinding_train(_one(pulse), injected_mean).to_pulses()[0]


def eve_phase_ambiguity(record: EveRecord, slots_with_four_photons: int) -> float:
    """Expected number of slots where a uniform pick among the four pairings is right."""
    return slots_with_four_photons / record.phase_candidates_per_slot
