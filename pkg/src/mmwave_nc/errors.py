"""Exceptions raised by the simulator and the bound toolkit."""


class SimulationError(Exception):
    """Base class for all mmWave NC errors."""


class ConfigError(SimulationError):
    """Experiment configuration could not be loaded or is inconsistent."""


class FieldDomainError(SimulationError, ValueError):
    """Finite-field operation outside its domain (inverse of zero, bad field size, reducible polynomial)."""


class DimensionMismatchError(SimulationError, ValueError):
    """Coefficient vector length does not match the decoder or generation dimension."""


class NotDecodableError(SimulationError):
    """Decoder does not hold a full-rank transfer matrix yet."""

    def __init__(self, rank: int, dimension: int):
        super().__init__(f"Not decodable yet: rank {rank} of {dimension}")
        self.rank = rank
        self.dimension = dimension


class NothingToSendError(SimulationError):
    """A relay holds no packets of the session and cannot form a coded packet."""


class NoUsableLinkError(SimulationError):
    """Every link of a device is in outage for the current time-span."""


class UndecodableSpanError(SimulationError):
    """Relays jointly do not hold every packet of the session."""


class InfeasibleBoundError(SimulationError, ValueError):
    """Singularity bound is not below one, so the backhaul bound is undefined."""


class AsymmetricScenarioError(SimulationError, ValueError):
    """Operation only defined for equal erasure probability on every link."""


class ErrorMessages:
    NO_USABLE_LINK = "No usable link for this time-span"
    UNDECODABLE = "Relays do not jointly hold every packet of the session"
    INFEASIBLE = "Backhaul bound undefined: phi_ub >= 1"
