"""Scenario files: one INI section per scenario, flat dotted keys.

Example::

    [honest-qkd]
    service = qkd
    mu = 0.1
    n_pulses = 100000
    det.efficiency = 0.1
    trials = 3
    seed = 7

``service = figure2`` selects the four-case power experiment instead of a
protocol; it reads ``mu``, ``det.*``, ``monitor.*`` and ``gates``.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .attacks import AttackKind
from .monitor import MonitorConfig
from .optics import ChannelParams
from .photon_stats import DetectorParams
from .protocols import SERVICES, ConfigError, ProtocolConfig

KNOWN_KEYS = {
    "service",
    "mu",
    "n_pulses",
    "message_bits",
    "n_bobs",
    "bob_secrets",
    "dishonest_bobs",
    "max_rounds",
    "gates",
    "channel.length_km",
    "channel.attenuation_db_per_km",
    "channel.bob_loss_db",
    "det.efficiency",
    "det.dark_count_prob",
    "attack.kind",
    "attack.p_swap",
    "attack.reflectance",
    "attack.injected_mean",
    "monitor.z_threshold",
    "monitor.min_gates",
    "trials",
    "seed",
    "output",
}


@dataclass(frozen=True)
class Figure2Params:
    mu: float = 0.1
    det: DetectorParams = DetectorParams()
    gates: int = 1_000_000
    monitor: MonitorConfig = MonitorConfig()

    def __post_init__(self):
        if not self.mu >= 0:
            raise ConfigError("mu must be ≥ 0")
        if self.gates < self.monitor.min_gates:
            raise ConfigError(
                f"gates must be ≥ monitor.min_gates ({self.monitor.min_gates}), got {self.gates}"
            )


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    base: ProtocolConfig | Figure2Params
    trials: int = 1
    seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"[{self.name}] trials must be ≥ 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"[{self.name}] seed must be a 64-bit unsigned integer")

    @property
    def kind(self) -> str:
        return "figure2" if isinstance(self.base, Figure2Params) else self.base.service


def _num(section, key, cast, default):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section.name}] {key}: cannot parse {raw!r}") from None


def _int(text: str) -> int:
    return int(float(text)) if "e" in text.lower() else int(text)


def _build(section: configparser.SectionProxy) -> ScenarioSpec:
    name = section.name
    unknown = sorted(set(section.keys()) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"[{name}] unknown key {unknown[0]!r}")
    service = section.get("service", "qkd").strip()
    try:
        det = DetectorParams(
            _num(section, "det.efficiency", float, 0.1),
            _num(section, "det.dark_count_prob", float, 1e-5),
        )
        monitor = MonitorConfig(
            _num(section, "monitor.z_threshold", float, 5.0),
            _num(section, "monitor.min_gates", _int, 10_000),
        )
        mu = _num(section, "mu", float, 0.1)
        if not mu >= 0:
            raise ConfigError("mu must be ≥ 0")
        if service == "figure2":
            base = Figure2Params(mu, det, _num(section, "gates", _int, 1_000_000), monitor)
        elif service in SERVICES:
            channel = ChannelParams(
                _num(section, "channel.length_km", float, 1.0),
                _num(section, "channel.attenuation_db_per_km", float, 0.2),
            )
            reflectance_raw = section.get("attack.reflectance", "0").strip()
            if reflectance_raw == "matched":
                reflectance = 1.0 - channel.transmittance**2
            else:
                reflectance = _num(section, "attack.reflectance", float, 0.0)
            attack = AttackKind(
                section.get("attack.kind", "none").strip(),
                _num(section, "attack.p_swap", float, 0.5),
                reflectance,
                _num(section, "attack.injected_mean", float, 1e6),
            )
            secrets = section.get("bob_secrets")
            secrets = tuple(s.strip() for s in secrets.split(",")) if secrets else None
            dishonest = section.get("dishonest_bobs")
            dishonest = tuple(int(i) for i in dishonest.split(",")) if dishonest else ()
            n_bobs = _num(section, "n_bobs", _int, len(secrets) if secrets else 1)
            message = section.get("message_bits")
            if message is not None:
                message = message.strip()
                if not message or set(message) - {"0", "1"}:
                    raise ConfigError("message_bits must be a non-empty string of 0 and 1")
            if service == "qsdc" and not message:
                raise ConfigError("message_bits is required for service qsdc")
            if service == "qss" and not secrets:
                raise ConfigError("bob_secrets is required for service qss")
            base = ProtocolConfig(
                service=service,
                mu=mu,
                n_pulses=_num(section, "n_pulses", _int, 100_000),
                message_bits=message,
                channel=channel,
                det_monitor=det,
                det_port0=det,
                det_port1=det,
                attack=attack,
                monitor=monitor,
                max_rounds=_num(section, "max_rounds", _int, 100),
                n_bobs=n_bobs,
                bob_secrets=secrets,
                dishonest_bobs=dishonest,
                bob_loss_db=_num(section, "channel.bob_loss_db", float, 0.0),
            )
        else:
            raise ConfigError(f"service must be one of {SERVICES + ('figure2',)}, got {service!r}")
        return ScenarioSpec(
            name,
            base,
            trials=_num(section, "trials", _int, 1),
            seed=_num(section, "seed", _int, 0),
            output_path=section.get("output"),
        )
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith("[") else f"[{name}] {msg}") from None
    except ValueError as exc:
        raise ConfigError(f"[{name}] {exc}") from None


def load_config(path) -> list[ScenarioSpec]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    # keep dotted keys exactly as written
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate scenario name {exc.section!r}") from None
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    specs = [_build(parser[name]) for name in parser.sections()]
    if not specs:
        raise ConfigError(f"{path} defines no scenarios")
    return specs
