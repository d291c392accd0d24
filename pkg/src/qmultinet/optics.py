"""Physical layer: dual-rail pulses and the elements they pass through.

Optical states are kept symbolic. A rail (one polarisation mode) is a list
of mutually incoherent components: coherent (mean, phase), thermal (mean)
or Fock (photon count, phase tag). Detection only ever needs the
generating-function value of each component, so nothing is expanded in a
Fock basis.

Two views of the same state are provided. ``ModeComponent``/``DualRailPulse``
describe one pulse. ``PulseTrain`` stores many pulses column-wise as numpy
arrays; every per-pulse operation here is a thin wrapper that runs the
train version on a train of length one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.random import Generator

from .photon_stats import DetectorParams, no_click_factor

TWO_PI = 2.0 * math.pi
COMPONENT_KINDS = ("coherent", "thermal", "fock")


class ContractError(ValueError):
    """An element was driven outside its operating contract."""


def _wrap_phase(phase):
    out = np.asarray(phase, dtype=float)
    if out.ndim == 0:
        out = float(np.mod(out, TWO_PI))
        return 0.0 if out >= TWO_PI else out
    if out.size and out.min() >= 0.0 and out.max() < 2.0 * TWO_PI:
        # common case after adding two wrapped phases
        out = out - TWO_PI * (out >= TWO_PI)
    else:
        out = np.mod(out, TWO_PI)
    out[out >= TWO_PI] = 0.0
    return out


@dataclass(frozen=True)
class ModeComponent:
    """One incoherent component of a polarisation mode.

    For ``fock`` the ``mean`` is the photon count and ``share`` is the
    probability that each of those photons is actually present in this mode
    (it drops below one after a beam splitter or rotator routes photons
    away; the routing is sampled at detection).
    """

    kind: str
    mean: float
    phase: float | None = 0.0
    share: float = 1.0

    def __post_init__(self):
        if self.kind not in COMPONENT_KINDS:
            raise ValueError(f"unknown component kind {self.kind!r}")
        if not self.mean >= 0:
            raise ValueError(f"component mean must be >= 0, got {self.mean!r}")
        if self.kind == "thermal":
            object.__setattr__(self, "phase", None)
        else:
            object.__setattr__(self, "phase", float(_wrap_phase(self.phase or 0.0)))
        if self.kind == "fock":
            if int(self.mean) != self.mean:
                raise ValueError("fock photon count must be an integer")
            if not 0.0 <= self.share <= 1.0:
                raise ValueError("fock share must lie in [0, 1]")
        else:
            object.__setattr__(self, "share", 1.0)

    @classmethod
    def coherent(cls, mean: float, phase: float = 0.0) -> "ModeComponent":
        return cls("coherent", float(mean), phase)

    @classmethod
    def thermal(cls, mean: float) -> "ModeComponent":
        return cls("thermal", float(mean), None)

    @classmethod
    def fock(cls, n: int, phase: float = 0.0, share: float = 1.0) -> "ModeComponent":
        return cls("fock", float(n), phase, share)

    @property
    def expected_photons(self) -> float:
        return self.mean * self.share


@dataclass(frozen=True)
class DualRailPulse:
    h: tuple[ModeComponent, ...] = ()
    v: tuple[ModeComponent, ...] = ()
    pulse_index: int = 0
    slot_index: int = 0
    # unrotated rails and accumulated rotation, so rotations compose exactly
    frame: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(self.h))
        object.__setattr__(self, "v", tuple(self.v))

    def total_mean(self) -> float:
        return sum(c.expected_photons for c in self.h + self.v)


@dataclass(frozen=True)
class ChannelParams:
    length_km: float = 1.0
    attenuation_db_per_km: float = 0.2

    def __post_init__(self):
        if not self.length_km >= 0:
            raise ValueError(f"channel.length_km must be >= 0, got {self.length_km!r}")
        if not self.attenuation_db_per_km >= 0:
            raise ValueError(
                f"channel.attenuation_db_per_km must be >= 0, got {self.attenuation_db_per_km!r}"
            )

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.attenuation_db_per_km * self.length_km / 10.0)


# --------------------------------------------------------------------------
# Column-wise pulse trains
# --------------------------------------------------------------------------


@dataclass
class Column:
    """One component slot across a whole train; zero mean marks absence."""

    kind: str
    mean: np.ndarray
    phase: np.ndarray | None = None
    share: np.ndarray | None = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        n = self.mean.shape[0]
        if self.kind != "thermal" and self.phase is None:
            self.phase = np.zeros(n)
        if self.kind == "fock" and self.share is None:
            self.share = np.ones(n)

    def take(self, idx) -> "Column":
        return Column(
            self.kind,
            self.mean[idx],
            None if self.phase is None else self.phase[idx],
            None if self.share is None else self.share[idx],
        )

    def scaled(self, factor) -> "Column":
        """Attenuate without sampling; fock components thin through ``share``."""
        if self.kind == "fock":
            return Column(self.kind, self.mean, self.phase, self.share * factor)
        return Column(self.kind, self.mean * factor, self.phase, self.share)

    def expected_photons(self) -> np.ndarray:
        return self.mean * self.share if self.kind == "fock" else self.mean

    def no_click(self, eta: float) -> np.ndarray:
        if self.kind == "fock":
            return no_click_factor("fock", self.mean, eta * self.share)
        return no_click_factor(self.kind, self.mean, eta)


Rail = list  # list[Column]


def _present(col: Column) -> np.ndarray:
    if col.kind == "fock":
        return (col.mean > 0) & (col.share > 0)
    return col.mean > 0


def compact(rail: Rail) -> Rail:
    """Drop empty columns and merge same-kind columns with disjoint support."""
    out: list[Column] = []
    support: list[np.ndarray] = []
    for col in rail:
        mask = _present(col)
        if not mask.any():
            continue
        for i, kept in enumerate(out):
            if kept.kind != col.kind or np.any(mask & support[i]):
                continue
            out[i] = Column(
                kept.kind,
                np.where(mask, col.mean, kept.mean),
                None if kept.phase is None else np.where(mask, col.phase, kept.phase),
                None if kept.share is None else np.where(mask, col.share, kept.share),
            )
            support[i] = support[i] | mask
            break
        else:
            out.append(col)
            support.append(mask)
    return out


@dataclass
class PulseTrain:
    h: Rail
    v: Rail
    pulse_index: np.ndarray
    slot_index: np.ndarray = None

    def __post_init__(self):
        self.pulse_index = np.asarray(self.pulse_index, dtype=np.int64)
        if self.slot_index is None:
            self.slot_index = self.pulse_index.copy()
        self.slot_index = np.asarray(self.slot_index, dtype=np.int64)

    def __len__(self) -> int:
        return self.pulse_index.shape[0]

    def with_rails(self, h: Rail, v: Rail) -> "PulseTrain":
        return PulseTrain(compact(h), compact(v), self.pulse_index, self.slot_index)

    def take(self, idx) -> "PulseTrain":
        return PulseTrain(
            [c.take(idx) for c in self.h],
            [c.take(idx) for c in self.v],
            self.pulse_index[idx],
            self.slot_index[idx],
        )

    def total_mean(self) -> np.ndarray:
        n = len(self)
        total = np.zeros(n)
        for c in self.h + self.v:
            total += c.expected_photons()
        return total

    @classmethod
    def from_pulses(cls, pulses: Sequence[DualRailPulse]) -> "PulseTrain":
        n = len(pulses)

        def rail_columns(attr):
            cols = []
            width = max((len(getattr(p, attr)) for p in pulses), default=0)
            for j in range(width):
                for kind in COMPONENT_KINDS:
                    mean = np.zeros(n)
                    phase = np.zeros(n)
                    share = np.ones(n)
                    used = False
                    for i, p in enumerate(pulses):
                        comps = getattr(p, attr)
                        if j < len(comps) and comps[j].kind == kind:
                            c = comps[j]
                            mean[i], share[i] = c.mean, c.share
                            phase[i] = c.phase or 0.0
                            used = True
                    if used:
                        cols.append(
                            Column(
                                kind,
                                mean,
                                None if kind == "thermal" else phase,
                                share if kind == "fock" else None,
                            )
                        )
            return cols

        return cls(
            rail_columns("h"),
            rail_columns("v"),
            [p.pulse_index for p in pulses],
            [p.slot_index for p in pulses],
        )

    def to_pulses(self) -> list[DualRailPulse]:
        return [
            DualRailPulse(
                rail_components(self.h, i),
                rail_components(self.v, i),
                int(self.pulse_index[i]),
                int(self.slot_index[i]),
            )
            for i in range(len(self))
        ]


def rail_components(rail: Rail, i: int) -> tuple[ModeComponent, ...]:
    comps = []
    for c in rail:
        if c.expected_photons()[i] <= 0:
            continue
        comps.append(
            ModeComponent(
                c.kind,
                float(c.mean[i]),
                None if c.phase is None else float(c.phase[i]),
                1.0 if c.share is None else float(c.share[i]),
            )
        )
    return tuple(comps)


def rail_from_components(components: Sequence[ModeComponent]) -> Rail:
    return PulseTrain.from_pulses([DualRailPulse(h=tuple(components))]).h


# --------------------------------------------------------------------------
# Train operations
# --------------------------------------------------------------------------


def alice_train(mu: float, arrangement, pulse_index=None, slot_index=None) -> PulseTrain:
    """Coherent on H and thermal on V where the bit is 0, swapped where it is 1."""
    if not mu >= 0:
        raise ValueError(f"mu must be >= 0, got {mu!r}")
    a = np.asarray(arrangement, dtype=np.int64)
    if np.any((a != 0) & (a != 1)):
        raise ValueError("arrangement bits must be 0 or 1")
    n = a.shape[0]
    if pulse_index is None:
        pulse_index = np.arange(n)
    on_h = mu * (a == 0)
    on_v = mu * (a == 1)
    h = [Column("coherent", on_h), Column("thermal", on_v)]
    v = [Column("coherent", on_v), Column("thermal", on_h)]
    return PulseTrain(compact(h), compact(v), pulse_index, slot_index)


def rotate(train: PulseTrain, theta) -> PulseTrain:
    """Polarisation rotator; ``theta`` may be a scalar or one angle per pulse."""
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (len(train),))
    c2 = np.cos(theta) ** 2
    # snap round-off so 0 and pi/2 are an exact identity and an exact swap
    c2 = np.where(c2 < 1e-15, 0.0, np.where(c2 > 1.0 - 1e-15, 1.0, c2))
    s2 = 1.0 - c2
    h = [c.scaled(c2) for c in train.h] + [c.scaled(s2) for c in train.v]
    v = [c.scaled(c2) for c in train.v] + [c.scaled(s2) for c in train.h]
    return train.with_rails(h, v)


def phase_modulate(train: PulseTrain, phi) -> PulseTrain:
    """Polarisation-insensitive phase shift; thermal components are untouched."""
    phi = np.broadcast_to(np.asarray(phi, dtype=float), (len(train),))

    def shift(rail):
        return [
            c if c.phase is None else Column(c.kind, c.mean, _wrap_phase(c.phase + phi), c.share)
            for c in rail
        ]

    return PulseTrain(shift(train.h), shift(train.v), train.pulse_index, train.slot_index)


def attenuate(train: PulseTrain, transmittance: float, rng: Generator) -> PulseTrain:
    """Scale coherent/thermal means by T; thin Fock states binomially."""
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance!r}")
    if transmittance == 1.0:
        return train

    def thin(rail):
        out = []
        for c in rail:
            if c.kind == "fock":
                n = rng.binomial(c.mean.astype(np.int64), transmittance).astype(float)
                out.append(Column(c.kind, n, c.phase, c.share))
            else:
                out.append(c.scaled(transmittance))
        return out

    return train.with_rails(thin(train.h), thin(train.v))


def propagate(train: PulseTrain, channel: ChannelParams, rng: Generator) -> PulseTrain:
    return attenuate(train, channel.transmittance, rng)


def split(train: PulseTrain) -> tuple[Rail, Rail]:
    return train.h, train.v


def interfere(rail: Rail, prev, curr, pulse_index=None) -> tuple[Rail, Rail]:
    """One-pulse-delay interferometer, evaluated in the central time bin.

    Row ``k`` of each output port holds what arrives when pulse ``prev[k]``
    (long arm) overlaps pulse ``curr[k]`` (short arm). Each input amplitude
    reaches a port scaled by 1/2, so a pair of equal coherent pulses with
    phase difference d puts m*cos(d/2)**2 on port 0 and m*sin(d/2)**2 on
    port 1. Coherent columns interfere column-by-column (same column means the
    same source); thermal and Fock inputs each add a quarter of their mean to
    both ports. The remaining half of the input leaves in the side bins,
    which carry no phase information and are not returned.
    """
    prev = np.asarray(prev, dtype=np.int64)
    curr = np.asarray(curr, dtype=np.int64)
    if pulse_index is not None:
        pulse_index = np.asarray(pulse_index)
        if np.any(pulse_index[curr] != pulse_index[prev] + 1):
            raise ContractError("interferometer inputs must be consecutive pulses")
    port0: list[Column] = []
    port1: list[Column] = []
    for c in rail:
        if c.kind == "coherent":
            r_p, r_c = np.sqrt(c.mean[prev]), np.sqrt(c.mean[curr])
            ph_p, ph_c = c.phase[prev], c.phase[curr]
            x_p, y_p = r_p * np.cos(ph_p), r_p * np.sin(ph_p)
            x_c, y_c = r_c * np.cos(ph_c), r_c * np.sin(ph_c)
            scale = c.mean[prev] + c.mean[curr]
            for sign, port in ((1.0, port0), (-1.0, port1)):
                x = 0.5 * (x_c + sign * x_p)
                y = 0.5 * (y_c + sign * y_p)
                mean = x * x + y * y
                # perfect destructive interference should give exact vacuum
                mean[mean <= 1e-14 * scale] = 0.0
                port.append(Column("coherent", mean, _wrap_phase(np.arctan2(y, x))))
        else:
            for idx in (prev, curr):
                quarter = c.take(idx).scaled(0.25)
                port0.append(quarter)
                port1.append(quarter)
    return compact(port0), compact(port1)


def rail_click_prob(rail: Rail, det: DetectorParams, n: int) -> np.ndarray:
    g = np.ones(n)
    for c in rail:
        g = g * c.no_click(det.efficiency)
    return 1.0 - (1.0 - det.dark_count_prob) * g


def detect_rail(rail: Rail, det: DetectorParams, rng: Generator, n: int) -> np.ndarray:
    """Bernoulli click per row with the row's analytic click probability."""
    return rng.random(n) < rail_click_prob(rail, det, n)


def inject(rail: Rail, column: Column) -> Rail:
    return compact(list(rail) + [column])


# --------------------------------------------------------------------------
# Per-pulse API
# --------------------------------------------------------------------------


def make_alice_pulse(mu: float, arrangement_bit: int, pulse_index: int = 0, slot_index: int = 0) -> DualRailPulse:
    train = alice_train(mu, [arrangement_bit], [pulse_index], [slot_index])
    return train.to_pulses()[0]


def _single(pulse: DualRailPulse) -> PulseTrain:
    return PulseTrain.from_pulses([pulse])


def apply_rotator(pulse: DualRailPulse, theta: float) -> DualRailPulse:
    """Rotate the polarisation of every component by ``theta``.

    The returned rails are the incoherent H/V projections. Each component
    occupies a single polarisation mode, so the pulse remembers its
    unrotated rails and a later rotation acts on the accumulated angle.
    """
    h0, v0, angle = pulse.frame or (pulse.h, pulse.v, 0.0)
    angle = float(angle + theta)
    base = DualRailPulse(h0, v0, pulse.pulse_index, pulse.slot_index)
    out = rotate(_single(base), angle).to_pulses()[0]
    residue = angle % math.pi
    if min(residue, math.pi - residue) < 1e-12:
        return out
    return replace(out, frame=(h0, v0, angle))


def apply_phase_modulator(pulse: DualRailPulse, phi: float) -> DualRailPulse:
    return phase_modulate(_single(pulse), phi).to_pulses()[0]


def apply_channel(pulse: DualRailPulse, ch: ChannelParams, rng: Generator) -> DualRailPulse:
    return propagate(_single(pulse), ch, rng).to_pulses()[0]


def pbs_split(pulse: DualRailPulse) -> tuple[tuple[ModeComponent, ...], tuple[ModeComponent, ...]]:
    return pulse.h, pulse.v


def interfere_dpsk(prev, curr):
    """Interfere two consecutive pulses (or their H-rail component lists).

    Returns the component lists reaching port 0 and port 1.
    """
    if isinstance(prev, DualRailPulse) and isinstance(curr, DualRailPulse):
        if curr.pulse_index != prev.pulse_index + 1:
            raise ContractError(
                f"pulses {prev.pulse_index} and {curr.pulse_index} are not consecutive"
            )
        prev, curr = prev.h, curr.h
    train = PulseTrain.from_pulses([DualRailPulse(h=tuple(prev)), DualRailPulse(h=tuple(curr))])
    p0, p1 = interfere(train.h, [0], [1])
    return rail_components(p0, 0), rail_components(p1, 0)


def detect(components: Sequence[ModeComponent], det: DetectorParams, rng: Generator) -> bool:
    rail = rail_from_components(components)
    return bool(detect_rail(rail, det, rng, 1)[0])


def component_click_prob(components: Sequence[ModeComponent], det: DetectorParams) -> float:
    return float(rail_click_prob(rail_from_components(components), det, 1)[0])
