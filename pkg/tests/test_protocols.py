import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmultinet.attacks import AttackKind
from qmultinet.optics import ChannelParams
from qmultinet.photon_stats import DetectorParams
from qmultinet.protocols import (
    ConfigError,
    ProtocolConfig,
    run_protocol,
    run_qkd,
    run_qsdc,
    run_qss,
)

from oracles import binomial_sigma, dark_count_qber

IDEAL = DetectorParams(1.0, 0.0)
LOSSLESS = ChannelParams(0.0)


def ideal(service="qkd", **kw):
    kw.setdefault("channel", LOSSLESS)
    return ProtocolConfig.with_detectors(IDEAL, service=service, **kw)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"service": "qrng"},
        {"mu": -0.1},
        {"n_pulses": 1},
        {"max_rounds": 0},
        {"n_bobs": 0},
        {"service": "qss", "n_bobs": 2, "bob_secrets": ("01",)},
        {"bob_secrets": ("01", "011")},
        {"n_bobs": 2, "dishonest_bobs": (2,)},
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        ProtocolConfig(**kwargs)


def test_arrival_mean_and_matched_reflectance():
    cfg = ProtocolConfig(mu=0.1, channel=ChannelParams(5.0, 0.2))
    t2 = 10 ** (-0.2)
    assert cfg.arrival_mean == pytest.approx(0.1 * t2)
    assert cfg.matched_reflectance() == pytest.approx(1 - t2)


def test_ideal_qkd_has_no_errors():
    t = run_qkd(ideal(n_pulses=20_000), np.random.default_rng(0))
    assert t.qber == 0.0
    assert t.sent_bits == t.recovered_bits
    assert len(t.detected_slots) > 1000
    assert not t.monitor_alarm and t.monitor_decided


def test_realistic_qkd_qber_matches_dark_count_oracle():
    cfg = ProtocolConfig(n_pulses=400_000)
    t = run_qkd(cfg, np.random.default_rng(1))
    det = cfg.det_port0
    q = dark_count_qber(cfg.arrival_mean, det.efficiency, det.dark_count_prob)
    n = len(t.detected_slots)
    assert abs(t.qber - q) < 3 * binomial_sigma(q, n)


def test_qkd_announces_positions_only():
    t = run_qkd(ideal(n_pulses=5_000), np.random.default_rng(2))
    assert [(m.sender, m.kind) for m in t.messages] == [("alice", "click_positions")]
    payload = t.messages[0].payload
    assert np.array_equal(payload, t.detected_slots)
    assert not payload.flags.writeable
    # positions are strictly increasing pulse indices, never port outcomes
    assert np.all(np.diff(payload) > 0) and payload.min() >= 1


def test_qkd_is_deterministic():
    cfg = ProtocolConfig(n_pulses=50_000)
    a = run_qkd(cfg, np.random.default_rng(3)).to_json()
    b = run_qkd(cfg, np.random.default_rng(3)).to_json()
    assert a == b
    assert json.loads(a)["service"] == "qkd"


def test_monitor_undecided_below_min_gates():
    t = run_qkd(ideal(n_pulses=100), np.random.default_rng(4))
    assert not t.monitor_decided and not t.monitor_alarm


def test_qsdc_delivers_message():
    msg = "1011001110001111"
    t = run_qsdc(ideal("qsdc", max_rounds=1000), msg, np.random.default_rng(5))
    assert t.complete and t.recovered_bits == msg and t.qber == 0.0
    assert t.rounds_used > 1
    kinds = [m.kind for m in t.messages]
    assert kinds.count("undetected_slots") == t.rounds_used


def test_qsdc_round_limit_leaves_message_incomplete():
    t = run_qsdc(ideal("qsdc", max_rounds=1), "0" * 200, np.random.default_rng(6))
    assert t.rounds_used == 1 and not t.complete
    assert len(t.detected_slots) == len(t.recovered_bits) < 200


def test_qsdc_tamper_flips_exactly_the_tampered_bits():
    msg = "0" * 32
    t = run_qsdc(ideal("qsdc", max_rounds=2000), msg, np.random.default_rng(7), tamper=[3, 17])
    assert t.complete
    assert [i for i, b in enumerate(t.recovered_bits) if b == "1"] == [3, 17]


def test_qsdc_rejects_bad_messages():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        run_qsdc(ideal("qsdc"), "", rng)
    with pytest.raises(ConfigError):
        run_qsdc(ideal("qsdc"), "01a", rng)
    with pytest.raises(ConfigError):
        run_qsdc(ideal("qkd"), "01", rng)


@settings(max_examples=15, deadline=None)
@given(secrets=st.lists(st.text("01", min_size=24, max_size=24), min_size=2, max_size=4))
def test_qss_recovers_xor_for_any_bob_order(secrets):
    expected = "".join(str(sum(int(s[i]) for s in secrets) % 2) for i in range(24))
    for order in (secrets, secrets[::-1]):
        cfg = ideal("qss", n_bobs=len(order), max_rounds=5000)
        t = run_qss(cfg, order, np.random.default_rng(8))
        assert t.complete and t.sent_bits == expected and t.recovered_bits == expected


def test_qss_dishonest_bob_randomises_bits():
    secrets = ["0" * 4000, "1" * 4000]
    cfg = ideal("qss", n_bobs=2, dishonest_bobs=(1,), max_rounds=5000)
    t = run_qss(cfg, secrets, np.random.default_rng(9))
    n = len(t.detected_slots)
    assert abs(t.qber - 0.5) < 3 * binomial_sigma(0.5, n)


def test_qss_secret_count_must_match():
    with pytest.raises(ConfigError):
        run_qss(ideal("qss", n_bobs=3), ["01", "10"], np.random.default_rng(0))


def test_intercept_resend_raises_qber_and_alarm():
    cfg = ideal(n_pulses=1_000_000, attack=AttackKind("intercept_resend", p_swap=0.5))
    t = run_qkd(cfg, np.random.default_rng(10))
    assert t.qber > 0.2
    assert t.monitor_alarm


def test_blinding_always_alarms():
    cfg = ProtocolConfig(n_pulses=20_000, attack=AttackKind("blinding"))
    t = run_qkd(cfg, np.random.default_rng(11))
    assert t.monitor_alarm and t.monitor_stats.clicks == t.monitor_stats.gates


def test_run_protocol_dispatch():
    rng = np.random.default_rng(12)
    assert run_protocol(ideal("qsdc", message_bits="0110", max_rounds=500), rng).service == "qsdc"
    assert run_protocol(ideal("qss", bob_secrets=("01", "11"), n_bobs=2, max_rounds=500), rng).recovered_bits == "10"
    with pytest.raises(ConfigError):
        run_protocol(ideal("qsdc"), rng)
