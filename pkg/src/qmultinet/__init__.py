"""Monte Carlo simulator of a thermal-decoy multi-service quantum network."""

from .attacks import AttackKind, EveRecord
from .monitor import DetectionStats, MonitorConfig
from .optics import ChannelParams, DualRailPulse, ModeComponent, PulseTrain
from .photon_stats import DetectorParams, PhotonDistribution
from .protocols import ProtocolConfig, ProtocolTranscript, run_qkd, run_qsdc, run_qss

__version__ = "0.1.0"

__all__ = [
    "AttackKind",
    "ChannelParams",
    "DetectionStats",
    "DetectorParams",
    "DualRailPulse",
    "EveRecord",
    "ModeComponent",
    "MonitorConfig",
    "PhotonDistribution",
    "ProtocolConfig",
    "ProtocolTranscript",
    "PulseTrain",
    "run_qkd",
    "run_qsdc",
    "run_qss",
]
