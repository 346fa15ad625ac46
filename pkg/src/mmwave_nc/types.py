from enum import IntEnum, StrEnum


# Link and radio types


class LinkStateType(StrEnum):
    """Millimeter-wave link state."""

    OUTAGE = "outage"
    LOS = "los"
    NLOS = "nlos"


class Modulation(StrEnum):
    """Modulations with a closed-form bit error probability."""

    QPSK = "qpsk"
    QAM64 = "64qam"


class Direction(StrEnum):
    DOWNLINK = "downlink"
    UPLINK = "uplink"


# Scheduling types


class Scheme(StrEnum):
    """Relaying scheme compared by the simulator."""

    FORWARDING = "forwarding"
    NETWORK_CODING = "nc"


class UplinkNcMode(StrEnum):
    """How relays take turns on the backhaul for inter-session coding."""

    SEQUENTIAL = "sequential"
    """Round-robin, one backhaul packet at a time, skipping relays that cannot add rank"""
    PARALLEL = "parallel"
    """Every relay that can add rank transmits in the same round"""
    OPENING_ROUND = "opening-round"
    """Every relay holding a packet transmits once without coordination, then sequential"""


class GroupingPolicy(StrEnum):
    """How uplink devices are grouped into sessions of z."""

    PROXIMITY = "proximity"
    RANDOM = "random"


class LogLevel(StrEnum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"

    @classmethod
    def parse(cls, value: "LogLevel | str") -> "LogLevel":
        """Case-insensitive lookup, ValueError for unknown names."""
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"Unknown log level {value!r}, expected one of {[m.value for m in cls]}") from None


class Campaign(IntEnum):
    """Campaign identifiers, also used as the stream tag when deriving seeds."""

    BOUNDS = 1
    DOWNLINK = 2
    UPLINK = 3
    PHI = 4


# Output markers

UNDEFINED = "undefined"
"""Written in place of a value where the backhaul bound is infeasible"""

CDF_LEVELS = tuple(round(0.05 * i, 2) for i in range(1, 21))
"""Quantile levels of the CDF summaries (nearest-rank)"""

RELAY_SPACINGS = (30.0, 60.0, 80.0)
UPLINK_CODE_LENGTHS = (4, 8)
