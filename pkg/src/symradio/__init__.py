"""Link-level simulation and analysis of symbiotic (cognitive backscatter) radio."""

from .core import (
    ChannelState,
    Constellation,
    SystemConfig,
    db2lin,
    lin2db,
    make_rng,
    noise_variance,
)
from .modem import build_constellation

__version__ = "0.1.0"

__all__ = [
    "ChannelState",
    "Constellation",
    "SystemConfig",
    "build_constellation",
    "db2lin",
    "lin2db",
    "make_rng",
    "noise_variance",
]
