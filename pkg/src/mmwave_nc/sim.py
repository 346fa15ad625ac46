"""Per time-span Forwarding and Network Coding schedulers for downlink and uplink."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from mmwave_nc.errors import ErrorMessages, NoUsableLinkError, UndecodableSpanError
from mmwave_nc.gf import FieldContext
from mmwave_nc.logging_config import get_logger
from mmwave_nc.rlnc import DecoderState, Generation, encode_inter, encode_intra
from mmwave_nc.types import Scheme, UplinkNcMode

logger = get_logger(__name__)


@dataclass
class RunMetrics:
    """Counts for one scheme over one time-span. One air transmission per time-slot."""

    air_transmissions: int = 0
    backhaul_transmissions: int = 0
    slots_to_complete: int = 0
    packets_delivered: int = 0
    outage: bool = False
    undecodable: bool = False

    @property
    def efficiency(self) -> float:
        return self.packets_delivered / self.air_transmissions if self.air_transmissions else math.nan

    @property
    def backhaul_efficiency(self) -> float:
        return self.packets_delivered / self.backhaul_transmissions if self.backhaul_transmissions else math.nan

    @property
    def counted(self) -> bool:
        return not (self.outage or self.undecodable)


def _usable(links) -> np.ndarray:
    p = np.asarray(links, dtype=float).ravel()
    p = p[p < 1.0]
    if p.size == 0:
        raise NoUsableLinkError(ErrorMessages.NO_USABLE_LINK)
    return p


# Downlink, intra-session


def downlink_forwarding(k: int, usable_links, rng: np.random.Generator) -> RunMetrics:
    """Each packet goes through a uniformly chosen relay, repeated until received."""
    try:
        p = _usable(usable_links)
    except NoUsableLinkError:
        return RunMetrics(outage=True)

    relays = rng.integers(0, p.size, size=k)
    attempts = int(rng.geometric(1.0 - p[relays]).sum())
    return RunMetrics(air_transmissions=attempts, slots_to_complete=attempts, packets_delivered=k)


def downlink_nc(
    k: int,
    usable_links,
    rng: np.random.Generator,
    field: FieldContext,
    generation: Optional[Generation] = None,
) -> RunMetrics:
    """Fresh coded packet through a uniformly chosen relay until the device decodes.

    Without a generation only encoding vectors travel, which is all the counts need.
    """
    try:
        p = _usable(usable_links)
    except NoUsableLinkError:
        return RunMetrics(outage=True)

    if generation is None:
        generation = Generation(field, field.zeros((k, 0)))
    decoder = DecoderState(field, k, generation.length)

    attempts = 0
    while not decoder.is_complete:
        pkt = encode_intra(generation, rng)
        relay = rng.integers(0, p.size)
        attempts += 1
        if rng.random() >= p[relay]:
            decoder.add(pkt)
    return RunMetrics(air_transmissions=attempts, slots_to_complete=attempts, packets_delivered=k)


# Uplink, inter-session


@dataclass
class DevicePhase:
    """Which relay holds which packet after every device got through once."""

    masks: np.ndarray
    """Shape (N, z_connected), masks[j, i] is True when relay j holds packet i"""
    attempts: np.ndarray
    """Air transmissions per connected device"""
    connected: list[int]
    excluded: list[int]

    @property
    def air_transmissions(self) -> int:
        return int(self.attempts.sum())


def uplink_device_phase(erasures: np.ndarray, rng: np.random.Generator) -> DevicePhase:
    """Every device broadcasts until at least one relay receives; devices with no usable link are excluded."""
    erasures = np.atleast_2d(np.asarray(erasures, dtype=float))
    n_devices, n_relays = erasures.shape
    connected = [i for i in range(n_devices) if (erasures[i] < 1.0).any()]
    excluded = [i for i in range(n_devices) if i not in connected]

    masks = np.zeros((n_relays, len(connected)), dtype=bool)
    attempts = np.zeros(len(connected), dtype=np.int64)
    for column, device in enumerate(connected):
        row = erasures[device]
        while True:
            attempts[column] += 1
            received = rng.random(n_relays) >= row
            if received.any():
                masks[:, column] = received
                break
    return DevicePhase(masks, attempts, connected, excluded)


def uplink_forwarding_backhaul(masks: np.ndarray) -> int:
    """Every held copy is forwarded; relays do not know what the others hold."""
    return int(np.asarray(masks, dtype=bool).sum())


def uplink_nc_backhaul(
    masks: np.ndarray,
    field: FieldContext,
    rng: np.random.Generator,
    mode: UplinkNcMode = UplinkNcMode.SEQUENTIAL,
) -> int:
    """Backhaul transmissions until the network decodes every packet the relays hold.

    Relays take turns by held-packet count, largest first. A relay whose packets are
    already spanned at the network is skipped, so redundant vectors such as a second
    [c, 0, 0, 0] are never sent. In opening-round mode every relay holding a packet
    transmits once before the skipping starts, so at least max(N, z) packets go out
    when N relays hold something.
    """
    masks = np.asarray(masks, dtype=bool)
    z = masks.shape[1]
    if z == 0:
        return 0
    if not masks.any(axis=0).all():
        raise UndecodableSpanError(ErrorMessages.UNDECODABLE)

    decoder = DecoderState(field, z)
    held = masks.sum(axis=1)
    order = [int(j) for j in np.argsort(-held, kind="stable") if held[j] > 0]

    sent = 0
    if mode == UplinkNcMode.OPENING_ROUND:
        # uncoordinated first round: every holding relay sends once
        for j in order:
            decoder.add(encode_inter(field, masks[j], None, rng))
            sent += 1
    while not decoder.is_complete:
        senders = [j for j in order if decoder.can_increase_rank(masks[j])]
        if not senders:
            raise UndecodableSpanError(ErrorMessages.UNDECODABLE)
        if mode == UplinkNcMode.PARALLEL:
            packets = [encode_inter(field, masks[j], None, rng) for j in senders]
            sent += len(packets)
            for pkt in packets:
                decoder.add(pkt)
            continue
        for j in senders:
            if decoder.is_complete:
                break
            # an earlier relay in this round may already cover this one
            if not decoder.can_increase_rank(masks[j]):
                continue
            decoder.add(encode_inter(field, masks[j], None, rng))
            sent += 1
    return sent


# Whole spans


def simulate_downlink_span(
    k: int, links, rng: np.random.Generator, field: FieldContext, schemes=(Scheme.FORWARDING, Scheme.NETWORK_CODING)
) -> dict[Scheme, RunMetrics]:
    """Both schemes over the same link realisation."""
    runs: dict[Scheme, RunMetrics] = {}
    for scheme in schemes:
        if scheme == Scheme.FORWARDING:
            runs[scheme] = downlink_forwarding(k, links, rng)
        else:
            runs[scheme] = downlink_nc(k, links, rng, field)
    return runs


@dataclass
class UplinkSpan:
    runs: dict[Scheme, RunMetrics]
    excluded_devices: int


def simulate_uplink_span(
    erasures: np.ndarray,
    rng: np.random.Generator,
    field: FieldContext,
    mode: UplinkNcMode = UplinkNcMode.SEQUENTIAL,
    schemes=(Scheme.FORWARDING, Scheme.NETWORK_CODING),
) -> UplinkSpan:
    """Shared device phase, then each backhaul scheme."""
    phase = uplink_device_phase(erasures, rng)
    delivered = len(phase.connected)
    runs: dict[Scheme, RunMetrics] = {}
    for scheme in schemes:
        if delivered == 0:
            runs[scheme] = RunMetrics(outage=True)
            continue
        if scheme == Scheme.FORWARDING:
            backhaul = uplink_forwarding_backhaul(phase.masks)
        else:
            try:
                backhaul = uplink_nc_backhaul(phase.masks, field, rng, mode)
            except UndecodableSpanError:
                logger.debug(f"Undecodable span with {delivered} connected devices")
                runs[scheme] = RunMetrics(air_transmissions=phase.air_transmissions, undecodable=True)
                continue
        runs[scheme] = RunMetrics(
            air_transmissions=phase.air_transmissions,
            backhaul_transmissions=backhaul,
            slots_to_complete=phase.air_transmissions,
            packets_delivered=delivered,
        )
    return UplinkSpan(runs, len(phase.excluded))


# Accumulators


@dataclass
class RatioEstimate:
    """Ratio of totals sum(y)/sum(x) with a delta-method standard error."""

    n: int = 0
    sx: float = 0.0
    sy: float = 0.0
    sxx: float = 0.0
    syy: float = 0.0
    sxy: float = 0.0

    def add(self, x: float, y: float) -> None:
        self.n += 1
        self.sx += x
        self.sy += y
        self.sxx += x * x
        self.syy += y * y
        self.sxy += x * y

    @property
    def ratio(self) -> float:
        return self.sy / self.sx if self.sx else math.nan

    @property
    def standard_error(self) -> float:
        if self.n < 2 or not self.sx:
            return math.nan
        r = self.ratio
        residual = self.syy - 2 * r * self.sxy + r * r * self.sxx
        mean_x = self.sx / self.n
        return math.sqrt(max(residual, 0.0) / (self.n * (self.n - 1))) / mean_x


@dataclass
class SchemeTotals:
    """Totals of one scheme over many spans. Efficiencies are ratios of totals."""

    spans: int = 0
    outage_spans: int = 0
    undecodable_spans: int = 0
    slots: int = 0
    air: RatioEstimate = field(default_factory=RatioEstimate)
    backhaul: RatioEstimate = field(default_factory=RatioEstimate)

    def add(self, run: RunMetrics) -> None:
        self.spans += 1
        if run.outage:
            self.outage_spans += 1
            return
        if run.undecodable:
            self.undecodable_spans += 1
            return
        self.slots += run.slots_to_complete
        self.air.add(run.air_transmissions, run.packets_delivered)
        if run.backhaul_transmissions:
            self.backhaul.add(run.backhaul_transmissions, run.packets_delivered)

    @property
    def counted_spans(self) -> int:
        return self.air.n

    @property
    def efficiency(self) -> float:
        return self.air.ratio

    @property
    def backhaul_efficiency(self) -> float:
        return self.backhaul.ratio

    @property
    def mean_delay(self) -> float:
        return self.slots / self.counted_spans if self.counted_spans else math.nan


def fixed_downlink(
    k: int,
    erasures,
    spans: int,
    field: FieldContext,
    rng: np.random.Generator,
    schemes=(Scheme.FORWARDING, Scheme.NETWORK_CODING),
) -> dict[Scheme, SchemeTotals]:
    """Monte-Carlo over spans with a fixed erasure vector."""
    totals = {scheme: SchemeTotals() for scheme in schemes}
    for _ in range(spans):
        for scheme, run in simulate_downlink_span(k, erasures, rng, field, schemes).items():
            totals[scheme].add(run)
    return totals


def fixed_uplink(
    erasures: np.ndarray,
    spans: int,
    field: FieldContext,
    rng: np.random.Generator,
    mode: UplinkNcMode = UplinkNcMode.SEQUENTIAL,
    schemes=(Scheme.FORWARDING, Scheme.NETWORK_CODING),
) -> dict[Scheme, SchemeTotals]:
    """Monte-Carlo over spans with a fixed (z, N) erasure matrix."""
    totals = {scheme: SchemeTotals() for scheme in schemes}
    for _ in range(spans):
        for scheme, run in simulate_uplink_span(erasures, rng, field, mode, schemes).runs.items():
            totals[scheme].add(run)
    return totals
