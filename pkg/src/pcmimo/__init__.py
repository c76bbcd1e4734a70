"""Massive-MIMO downlink simulation under pilot-contamination attacks."""

from .config import SystemConfig
from .channel import (
    AttackVector,
    ChannelRealization,
    EstimatedChannels,
    LargeScale,
    Topology,
    estimate_channels,
    path_gain,
    sample_channel,
    sample_topology,
)
from .rates import (
    PowerAllocation,
    RateReport,
    SecrecyReport,
    asymptotic_rates,
    exact_rates,
    hybrid_sum_rate,
    jain_fairness,
    leakage_rates,
    secrecy_report,
)

__version__ = "0.1.0"

__all__ = [
    "SystemConfig",
    "AttackVector",
    "ChannelRealization",
    "EstimatedChannels",
    "LargeScale",
    "Topology",
    "estimate_channels",
    "path_gain",
    "sample_channel",
    "sample_topology",
    "PowerAllocation",
    "RateReport",
    "SecrecyReport",
    "asymptotic_rates",
    "exact_rates",
    "hybrid_sum_rate",
    "jain_fairness",
    "leakage_rates",
    "secrecy_report",
]
