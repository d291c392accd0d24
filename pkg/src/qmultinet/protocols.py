"""The three services run over the same optical setup.

* QKD: DPSK with the roles reversed. Bob modulates every pulse with 0 or pi,
  Alice owns the interferometer and reads a bit at every pulse boundary.
* QSDC: pulses are grouped in two-pulse slots and Bob writes one message bit
  per slot as the intra-slot phase difference. Undetected slots are
  announced and resent with fresh polarisation arrangements.
* QSS: several Bobs modulate in series, each contributing secret * pi to the
  intra-slot difference, so Alice reads the XOR of all secrets.

Alice's arrangement bits and Bob's phases never cross the module boundary
except through detections and the classical message log.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.random import Generator

from .attacks import AttackKind, EveRecord, apply_attack, blinding_train
from .monitor import DetectionStats, MonitorConfig, alarm, expected_thermal_rate, z_score
from .optics import (
    ChannelParams,
    alice_train,
    attenuate,
    detect_rail,
    interfere,
    phase_modulate,
    rotate,
)
from .photon_stats import DetectorParams

SERVICES = ("qkd", "qsdc", "qss")


class ConfigError(ValueError):
    pass


def _bits(value) -> np.ndarray:
    if isinstance(value, str):
        if value and set(value) <= {"0", "1"}:
            return np.frombuffer(value.encode(), dtype=np.uint8) - ord("0")
        raise ConfigError(f"bit string must contain only 0 and 1, got {value!r}")
    return np.asarray(value, dtype=np.uint8)


def _bitstr(bits) -> str:
    return (np.asarray(bits, dtype=np.uint8).ravel() + ord("0")).tobytes().decode("ascii")


def _frozen(values) -> np.ndarray:
    out = np.array(values, dtype=np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ProtocolConfig:
    service: str = "qkd"
    mu: float = 0.1
    n_pulses: int = 100_000
    message_bits: str | None = None
    channel: ChannelParams = ChannelParams()
    det_monitor: DetectorParams = DetectorParams()
    det_port0: DetectorParams = DetectorParams()
    det_port1: DetectorParams = DetectorParams()
    attack: AttackKind = AttackKind()
    monitor: MonitorConfig = MonitorConfig()
    max_rounds: int = 100
    n_bobs: int = 1
    bob_secrets: tuple[str, ...] | None = None
    dishonest_bobs: tuple[int, ...] = ()
    bob_loss_db: float = 0.0

    def __post_init__(self):
        if self.service not in SERVICES:
            raise ConfigError(f"service must be one of {SERVICES}, got {self.service!r}")
        if not self.mu >= 0:
            raise ConfigError("mu must be ≥ 0")
        if self.service == "qkd" and self.n_pulses < 2:
            raise ConfigError("n_pulses must be ≥ 2 for qkd")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be ≥ 1")
        if self.n_bobs < 1:
            raise ConfigError("n_bobs must be ≥ 1")
        if self.bob_loss_db < 0:
            raise ConfigError("channel.bob_loss_db must be ≥ 0")
        if self.bob_secrets is not None:
            object.__setattr__(self, "bob_secrets", tuple(self.bob_secrets))
            lengths = {len(s) for s in self.bob_secrets}
            if len(lengths) > 1:
                raise ConfigError("bob_secrets must all have the same length")
            if self.service == "qss" and len(self.bob_secrets) != self.n_bobs:
                raise ConfigError(
                    f"n_bobs is {self.n_bobs} but {len(self.bob_secrets)} secrets were given"
                )
        object.__setattr__(self, "dishonest_bobs", tuple(self.dishonest_bobs))
        if any(not 0 <= i < self.n_bobs for i in self.dishonest_bobs):
            raise ConfigError("dishonest_bobs indices must be within range(n_bobs)")

    @classmethod
    def with_detectors(cls, det: DetectorParams, **kwargs) -> "ProtocolConfig":
        return cls(det_monitor=det, det_port0=det, det_port1=det, **kwargs)

    @property
    def bob_transmittance(self) -> float:
        return 10.0 ** (-self.bob_loss_db / 10.0)

    @property
    def arrival_mean(self) -> float:
        """Mean photon number per rail that Alice expects back from an honest link."""
        return self.mu * self.channel.transmittance**2 * self.bob_transmittance

    def matched_reflectance(self) -> float:
        """Beam-splitter tap that mimics the double-pass fibre loss exactly."""
        return 1.0 - self.channel.transmittance**2


@dataclass(frozen=True)
class Message:
    """Public classical message; ``payload`` is a read-only integer array."""

    sender: str
    kind: str
    payload: np.ndarray


@dataclass
class ProtocolTranscript:
    service: str
    sent_bits: str
    detected_slots: np.ndarray
    recovered_bits: str
    qber: float
    rounds_used: int
    monitor_alarm: bool
    monitor_stats: DetectionStats
    expected_rate: float
    z_score: float
    monitor_decided: bool
    complete: bool
    eve_record: EveRecord = field(default_factory=EveRecord)
    messages: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["detected_slots"] = [int(p) for p in self.detected_slots]
        out["monitor_stats"] = {"gates": self.monitor_stats.gates, "clicks": self.monitor_stats.clicks}
        out["messages"] = [
            {"sender": m.sender, "kind": m.kind, "payload_size": len(m.payload)} for m in self.messages
        ]
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class _Link:
    """Outcome of one batch of pulses through the setup, as Alice sees it."""

    port0: np.ndarray
    port1: np.ndarray
    monitor: DetectionStats
    eve: EveRecord


def _transmit(
    cfg: ProtocolConfig,
    arrangement: np.ndarray,
    bob_phase: np.ndarray,
    slot_index: np.ndarray,
    prev: np.ndarray,
    curr: np.ndarray,
    rng: Generator,
) -> _Link:
    t = cfg.channel.transmittance
    kind = cfg.attack.kind
    train = alice_train(cfg.mu, arrangement, slot_index=slot_index)
    if kind != "beam_splitter":
        train = attenuate(train, t, rng)
    train = phase_modulate(train, bob_phase)
    train = attenuate(train, cfg.bob_transmittance, rng)
    eve = EveRecord()
    if kind in ("intercept_resend", "pns", "beam_splitter"):
        train, eve = apply_attack(train, cfg.attack, rng)
    if kind not in ("pns", "beam_splitter"):
        train = attenuate(train, t, rng)
    if kind == "blinding":
        train = blinding_train(train, cfg.attack.injected_mean)
        eve = EveRecord(pulses_attacked=len(train))
    train = rotate(train, arrangement * (math.pi / 2))
    h, v = train.h, train.v
    n = len(train)
    thermal_clicks = detect_rail(v, cfg.det_monitor, rng, n)
    port0, port1 = interfere(h, prev, curr, train.pulse_index)
    c0 = detect_rail(port0, cfg.det_port0, rng, prev.size)
    c1 = detect_rail(port1, cfg.det_port1, rng, prev.size)
    return _Link(c0, c1, DetectionStats(n, int(thermal_clicks.sum())), eve)


def _monitor_verdict(cfg: ProtocolConfig, stats: DetectionStats):
    expected = expected_thermal_rate(cfg.arrival_mean, cfg.det_monitor)
    if stats.gates == 0:
        return expected, 0.0, False, False
    z = z_score(stats, expected)
    if stats.gates < cfg.monitor.min_gates:
        return expected, z, False, False
    return expected, z, alarm(stats, expected, cfg.monitor), True


def _single_clicks(link: _Link):
    """Boundaries where exactly one port fired, and the bit that port encodes."""
    detected = link.port0 ^ link.port1
    return detected, link.port1.astype(np.uint8)


def run_qkd(cfg: ProtocolConfig, rng: Generator) -> ProtocolTranscript:
    if cfg.service != "qkd":
        raise ConfigError(f"run_qkd needs service='qkd', got {cfg.service!r}")
    n = cfg.n_pulses
    messages: list[Message] = []

    arrangement = rng.integers(0, 2, n)
    bob_bits = rng.integers(0, 2, n).astype(np.uint8)
    bob_phase = math.pi * bob_bits

    pulse = np.arange(n)
    prev, curr = pulse[:-1], pulse[1:]
    link = _transmit(cfg, arrangement, bob_phase, pulse // 2, prev, curr, rng)
    detected, alice_raw = _single_clicks(link)

    positions = curr[detected]
    messages.append(Message("alice", "click_positions", _frozen(positions)))

    # Bob's side: his sifted key comes from his own phases at the announced boundaries
    announced = messages[-1].payload
    bob_key = bob_bits[announced] ^ bob_bits[announced - 1]
    alice_key = alice_raw[detected]

    errors = int(np.sum(bob_key != alice_key))
    qber = errors / positions.size if positions.size else 0.0
    expected, z, is_alarm, decided = _monitor_verdict(cfg, link.monitor)
    return ProtocolTranscript(
        service="qkd",
        sent_bits=_bitstr(bob_key),
        detected_slots=positions,
        recovered_bits=_bitstr(alice_key),
        qber=qber,
        rounds_used=1,
        monitor_alarm=is_alarm,
        monitor_stats=link.monitor,
        expected_rate=expected,
        z_score=z,
        monitor_decided=decided,
        complete=True,
        eve_record=link.eve,
        messages=messages,
    )


def _run_slots(cfg: ProtocolConfig, n_slots: int, bob_phases, rng: Generator):
    """Slot engine shared by QSDC and QSS, with retransmission of missed slots.

    ``bob_phases(pending, rng)`` returns the summed phase of all Bobs for the
    2 * len(pending) pulses of a round; slot k of the round carries message
    position pending[k].
    """
    recovered = np.full(n_slots, -1, dtype=np.int8)
    pending = np.arange(n_slots)
    monitor = DetectionStats()
    eve = EveRecord()
    messages: list[Message] = []
    rounds = 0
    while pending.size and rounds < cfg.max_rounds:
        rounds += 1
        m = pending.size
        arrangement = rng.integers(0, 2, 2 * m)
        phase = bob_phases(pending, rng)
        pulse = np.arange(2 * m)
        prev = pulse[0::2]
        link = _transmit(cfg, arrangement, phase, pulse // 2, prev, prev + 1, rng)
        detected, bits = _single_clicks(link)
        monitor = monitor + link.monitor
        eve.absorb(link.eve)
        recovered[pending[detected]] = bits[detected]
        missed = np.flatnonzero(~detected)
        messages.append(Message("alice", "undetected_slots", _frozen(missed)))
        # both sides advance the pending list from the public announcement only
        pending = pending[messages[-1].payload]
        if pending.size:
            messages.append(Message("bob", "retransmit", _frozen([pending.size])))
    return recovered, rounds, monitor, eve, messages


def _slot_transcript(cfg, service, intended, recovered, rounds, monitor, eve, messages):
    got = recovered >= 0
    positions = np.flatnonzero(got)
    rec = recovered[positions].astype(np.uint8)
    errors = int(np.sum(rec != intended[positions]))
    expected, z, is_alarm, decided = _monitor_verdict(cfg, monitor)
    return ProtocolTranscript(
        service=service,
        sent_bits=_bitstr(intended),
        detected_slots=positions,
        recovered_bits=_bitstr(rec),
        qber=errors / positions.size if positions.size else 0.0,
        rounds_used=rounds,
        monitor_alarm=is_alarm,
        monitor_stats=monitor,
        expected_rate=expected,
        z_score=z,
        monitor_decided=decided,
        complete=bool(got.all()),
        eve_record=eve,
        messages=messages,
    )


def run_qsdc(cfg: ProtocolConfig, message, rng: Generator, tamper=()) -> ProtocolTranscript:
    """Deliver ``message`` (bit string) from Bob to Alice.

    ``tamper`` lists message positions where Bob's modulator adds a stray pi
    to the second pulse; use it for fault injection.
    """
    if cfg.service != "qsdc":
        raise ConfigError(f"run_qsdc needs service='qsdc', got {cfg.service!r}")
    msg = _bits(message)
    if msg.size == 0:
        raise ConfigError("message must be non-empty")
    flip = np.zeros(msg.size, dtype=np.uint8)
    flip[list(tamper)] = 1

    def bob_phases(pending, rng):
        ref = math.pi * rng.integers(0, 2, pending.size)
        phase = np.empty(2 * pending.size)
        phase[0::2] = ref
        phase[1::2] = ref + math.pi * ((msg[pending] + flip[pending]) % 2)
        return phase

    out = _run_slots(cfg, msg.size, bob_phases, rng)
    return _slot_transcript(cfg, "qsdc", msg, *out)


def run_qss(cfg: ProtocolConfig, bob_secrets, rng: Generator) -> ProtocolTranscript:
    """Alice recovers the XOR of all Bobs' secrets, slot by slot."""
    if cfg.service != "qss":
        raise ConfigError(f"run_qss needs service='qss', got {cfg.service!r}")
    secrets = [_bits(s) for s in bob_secrets]
    if not secrets or len({s.size for s in secrets}) != 1:
        raise ConfigError("bob_secrets must be non-empty and of equal length")
    if len(secrets) != cfg.n_bobs:
        raise ConfigError(f"n_bobs is {cfg.n_bobs} but {len(secrets)} secrets were given")
    dishonest = set(cfg.dishonest_bobs)

    def bob_phases(pending, rng):
        total = np.zeros(2 * pending.size)
        for i, secret in enumerate(secrets):
            if i in dishonest:
                total += rng.uniform(0.0, 2.0 * math.pi, 2 * pending.size)
                continue
            ref = math.pi * rng.integers(0, 2, pending.size)
            total[0::2] += ref
            total[1::2] += ref + math.pi * secret[pending]
        return total

    target = np.bitwise_xor.reduce(np.vstack(secrets), axis=0)
    out = _run_slots(cfg, target.size, bob_phases, rng)
    return _slot_transcript(cfg, "qss", target, *out)


def run_protocol(cfg: ProtocolConfig, rng: Generator) -> ProtocolTranscript:
    """Run whatever ``cfg.service`` names, taking payloads from the config."""
    if cfg.service == "qkd":
        return run_qkd(cfg, rng)
    if cfg.service == "qsdc":
        if not cfg.message_bits:
            raise ConfigError("qsdc needs message_bits")
        return run_qsdc(cfg, cfg.message_bits, rng)
    if not cfg.bob_secrets:
        raise ConfigError("qss needs bob_secrets")
    return run_qss(cfg, cfg.bob_secrets, rng)
