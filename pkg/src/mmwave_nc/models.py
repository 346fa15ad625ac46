"""Pydantic models for experiment configuration and analytic scenarios."""

import hashlib
import json
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from mmwave_nc.errors import AsymmetricScenarioError, ConfigError
from mmwave_nc.types import (
    RELAY_SPACINGS,
    UPLINK_CODE_LENGTHS,
    GroupingPolicy,
    LinkStateType,
    Modulation,
    Scheme,
    UplinkNcMode,
)


# Radio and channel


class LinkBudget(BaseModel):
    """Link budget of one direction, all values in dB / dBm."""

    tx_power_dbm: float
    beamforming_gain_db: float
    coding_gain_db: float = 6.0
    noise_power_dbm: float = -87.0
    noise_figure_db: float = 5.0
    modulation: Modulation
    block_length_bits: int = Field(10000, ge=1)

    @classmethod
    def downlink(cls) -> "LinkBudget":
        return cls(tx_power_dbm=30.0, beamforming_gain_db=20.0, modulation=Modulation.QAM64)

    @classmethod
    def uplink(cls) -> "LinkBudget":
        return cls(tx_power_dbm=20.0, beamforming_gain_db=0.0, modulation=Modulation.QPSK)

    @property
    def gain_db(self) -> float:
        return self.tx_power_dbm + self.beamforming_gain_db + self.coding_gain_db

    @property
    def noise_db(self) -> float:
        return self.noise_power_dbm + self.noise_figure_db


class PathLossParams(BaseModel):
    """Log-distance path loss PL(d) = alpha + 10 beta log10(d) + shadowing."""

    alpha: float
    beta: float
    sigma_db: float = Field(0.0, ge=0.0)


class StateProbabilityParams(BaseModel):
    """Distance based outage / LOS / NLOS probability curves.

    p_out(d) = max(0, 1 - exp(-a_out d + b_out)), p_los(d) = (1 - p_out(d)) exp(-a_los d),
    p_nlos(d) = 1 - p_out(d) - p_los(d). ``pinned`` forces a single state at every distance.

    The default outage curve is zero up to 22.5 m and reaches 0.9 at about 40 m, so a
    device has one or two relays within reach at D_R = 80 m and four or more at D_R = 30 m.
    """

    a_out: float = Field(1.0 / 7.5, ge=0.0)
    b_out: float = 3.0
    a_los: float = Field(1.0 / 67.1, ge=0.0)
    pinned: Optional[LinkStateType] = None

    @classmethod
    def pinned_to(cls, state: LinkStateType) -> "StateProbabilityParams":
        return cls(pinned=state)


class ChannelParams(BaseModel):
    """28 GHz channel model parameters."""

    los: PathLossParams = Field(default_factory=lambda: PathLossParams(alpha=61.4, beta=2.0, sigma_db=5.8))
    nlos: PathLossParams = Field(default_factory=lambda: PathLossParams(alpha=72.0, beta=2.92, sigma_db=8.7))
    states: StateProbabilityParams = Field(default_factory=StateProbabilityParams)
    carrier_ghz: float = 28.0
    erasure_threshold: float = Field(0.9, gt=0.0, le=1.0, description="T_e, links above it are treated as outage")
    min_distance_m: float = Field(1.0, gt=0.0, description="Distances below this are clamped in the path loss law")


# Deployment and scheduling


class StreetScenario(BaseModel):
    """Street canyon with relays staggered on both sides and devices on the sidewalks."""

    n_relays: int = Field(10, ge=1)
    relay_spacing: float = Field(30.0, gt=0.0, description="D_R in meters")
    street_width: float = Field(20.0, gt=0.0, description="w_s in meters")
    sidewalk_offset: float = Field(2.0, ge=0.0, description="Sidewalk distance from each street edge")
    n_devices: int = Field(5000, ge=0)

    @model_validator(mode="after")
    def sidewalks_inside_street(self):
        if 2 * self.sidewalk_offset > self.street_width:
            raise ValueError("Sidewalk offset must leave both sidewalks inside the street")
        return self

    @property
    def relays_side_a(self) -> int:
        return (self.n_relays + 1) // 2

    @property
    def relays_side_b(self) -> int:
        return self.n_relays // 2

    @property
    def street_length(self) -> float:
        """Span of the staggered relay grid, (N_R/2 - 1) D_R + D_R/2."""
        return max((self.n_relays / 2 - 1) * self.relay_spacing + self.relay_spacing / 2, 0.0)


class TimeSpanConfig(BaseModel):
    k: int = Field(8, ge=1, description="Packets per time-span on the downlink")
    z: int = Field(4, ge=1, description="Devices combined per uplink session")
    spans: int = Field(200, ge=1, description="Time-spans simulated per device or device group")


class SeriesControl(BaseModel):
    tolerance: float = Field(1e-12, gt=0.0)
    max_terms: int = Field(10**6, ge=1)
    precision_digits: int = Field(50, ge=15)


# Analytic scenarios


class DownlinkScenario(BaseModel):
    """One device served by N relays with erasure probabilities p_1..p_N."""

    k: int = Field(..., ge=1)
    erasures: list[float] = Field(..., min_length=1)

    @field_validator("erasures")
    @classmethod
    def erasures_in_range(cls, value: list[float]) -> list[float]:
        for p in value:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"Erasure probability out of range: {p}")
        return value

    @property
    def n_relays(self) -> int:
        return len(self.erasures)

    @classmethod
    def symmetric(cls, k: int, n_relays: int, p: float) -> "DownlinkScenario":
        return cls(k=k, erasures=[p] * n_relays)

    @classmethod
    def single_low(cls, k: int, n_relays: int, p_low: float, p_high: float) -> "DownlinkScenario":
        """One link with low erasure, every other link high."""
        return cls(k=k, erasures=[p_low] + [p_high] * (n_relays - 1))

    @classmethod
    def single_high(cls, k: int, n_relays: int, p_low: float, p_high: float) -> "DownlinkScenario":
        """One link with high erasure, every other link low."""
        if n_relays == 1:
            return cls(k=k, erasures=[p_high])
        return cls(k=k, erasures=[p_high] + [p_low] * (n_relays - 1))


class UplinkScenario(BaseModel):
    """z devices reaching N relays, erasures[i][j] for device i and relay j."""

    z: int = Field(..., ge=1)
    erasures: list[list[float]] = Field(..., min_length=1)
    q: int = Field(1024, ge=2)

    @model_validator(mode="after")
    def shape_matches(self):
        if len(self.erasures) != self.z:
            raise ValueError(f"Expected {self.z} erasure rows, got {len(self.erasures)}")
        widths = {len(row) for row in self.erasures}
        if len(widths) != 1 or 0 in widths:
            raise ValueError("Erasure rows must be non-empty and of equal length")
        for row in self.erasures:
            for p in row:
                if not 0.0 <= p <= 1.0:
                    raise ValueError(f"Erasure probability out of range: {p}")
        return self

    @property
    def n_relays(self) -> int:
        return len(self.erasures[0])

    @classmethod
    def symmetric(cls, z: int, n_relays: int, p: float, q: int = 1024) -> "UplinkScenario":
        return cls(z=z, erasures=[[p] * n_relays for _ in range(z)], q=q)

    def symmetric_p(self) -> float:
        """The common erasure probability, raises when links differ."""
        values = {p for row in self.erasures for p in row}
        if len(values) != 1:
            raise AsymmetricScenarioError("Backhaul bound for network coding needs equal erasure on every link")
        return values.pop()


# Experiment configuration


class BoundsConfig(BaseModel):
    erasure_pairs: list[tuple[float, float]] = Field(default_factory=lambda: [(0.1, 0.6), (0.1, 0.9)])
    max_relays: int = Field(10, ge=1)
    k: int = Field(8, ge=1)
    code_lengths: list[int] = Field(default_factory=lambda: [4, 12])
    field_size: int = Field(1024, ge=2)
    backhaul_relays: int = Field(4, ge=1, description="N used for the symmetric backhaul curves")
    p_grid: list[float] = Field(default_factory=lambda: [round(0.05 * i, 2) for i in range(0, 20)])
    simulate_spans: int = Field(0, ge=0, description="Spans per p for simulated backhaul columns (0 skips)")
    series: SeriesControl = Field(default_factory=SeriesControl)


class PhiConfig(BaseModel):
    code_lengths: list[int] = Field(default_factory=lambda: [2, 4])
    field_sizes: list[int] = Field(default_factory=lambda: [2, 16, 1024])
    p_grid: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5])
    trials: int = Field(10**5, ge=1)


class ExperimentConfig(BaseModel):
    """Everything a campaign needs. Defaults reproduce the simulation parameter table."""

    scenario: StreetScenario = Field(default_factory=StreetScenario)
    channel: ChannelParams = Field(default_factory=ChannelParams)
    downlink_budget: LinkBudget = Field(default_factory=LinkBudget.downlink)
    uplink_budget: LinkBudget = Field(default_factory=LinkBudget.uplink)
    timespan: TimeSpanConfig = Field(default_factory=TimeSpanConfig)
    field_size: int = Field(1024, ge=2)
    schemes: list[Scheme] = Field(default_factory=lambda: [Scheme.FORWARDING, Scheme.NETWORK_CODING])
    relay_spacings: list[float] = Field(default_factory=lambda: list(RELAY_SPACINGS))
    uplink_code_lengths: list[int] = Field(default_factory=lambda: list(UPLINK_CODE_LENGTHS))
    grouping: GroupingPolicy = GroupingPolicy.RANDOM
    uplink_nc_mode: UplinkNcMode = UplinkNcMode.OPENING_ROUND
    bounds: BoundsConfig = Field(default_factory=BoundsConfig)
    phi: PhiConfig = Field(default_factory=PhiConfig)
    replications: int = Field(1, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    output_dir: str = "results"

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        """Read a JSON config file, mapping every failure to ConfigError."""
        try:
            text = Path(path).read_text(encoding="utf-8")
            return cls.model_validate_json(text)
        except OSError as e:
            raise ConfigError(f"Cannot read config {path}: {e}") from e
        except ValidationError as e:
            raise ConfigError(f"Invalid config {path}: {e}") from e

    def dump_template(self, path: str | Path) -> None:
        Path(path).write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Apply CLI overrides of top-level fields, skipping unset ones."""
        update = {key: value for key, value in overrides.items() if value is not None}
        if not update:
            return self
        return self.model_validate({**self.model_dump(), **update})

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()
