"""Geometry to packet erasure: link state, path loss, SNR and block error rate."""

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from mmwave_nc.deployment import distance_matrix
from mmwave_nc.logging_config import get_logger
from mmwave_nc.models import ChannelParams, LinkBudget, StateProbabilityParams
from mmwave_nc.types import Direction, LinkStateType, Modulation

logger = get_logger(__name__)

STATE_ORDER: tuple[LinkStateType, ...] = (LinkStateType.OUTAGE, LinkStateType.LOS, LinkStateType.NLOS)
OUTAGE, LOS, NLOS = range(3)


# Link state


def state_probabilities(distance, params: StateProbabilityParams) -> np.ndarray:
    """Probabilities of (outage, LOS, NLOS) at each distance, stacked on the last axis."""
    d = np.asarray(distance, dtype=float)
    if params.pinned is not None:
        probs = np.zeros(d.shape + (3,))
        probs[..., STATE_ORDER.index(params.pinned)] = 1.0
        return probs

    p_out = np.maximum(0.0, 1.0 - np.exp(-params.a_out * d + params.b_out))
    p_los = (1.0 - p_out) * np.exp(-params.a_los * d)
    p_nlos = np.clip(1.0 - p_out - p_los, 0.0, 1.0)
    return np.stack((p_out, p_los, p_nlos), axis=-1)


def sample_link_states(distance, params: StateProbabilityParams, rng: np.random.Generator) -> np.ndarray:
    """State codes (indices into STATE_ORDER) drawn independently per distance."""
    cumulative = np.cumsum(state_probabilities(distance, params), axis=-1)
    u = rng.random(size=cumulative.shape[:-1])[..., np.newaxis]
    return np.minimum((u >= cumulative).sum(axis=-1), 2)


def sample_link_state(distance: float, params: ChannelParams, rng: np.random.Generator) -> LinkStateType:
    if distance < 0:
        raise ValueError(f"Distance must be >= 0, got {distance}")
    return STATE_ORDER[int(sample_link_states(distance, params.states, rng))]


# Link budget


def pathloss_db(distance, state: LinkStateType, params: ChannelParams, rng: np.random.Generator):
    """Log-distance path loss with optional log-normal shadowing."""
    if state == LinkStateType.OUTAGE:
        raise ValueError("Path loss is not defined for a link in outage")
    model = params.los if state == LinkStateType.LOS else params.nlos
    d = np.maximum(np.asarray(distance, dtype=float), params.min_distance_m)
    loss = model.alpha + 10.0 * model.beta * np.log10(d)
    if model.sigma_db > 0:
        loss = loss + rng.normal(0.0, model.sigma_db, size=np.shape(d))
    return loss


def snr_from_pathloss(loss_db, budget: LinkBudget):
    return budget.gain_db - np.asarray(loss_db, dtype=float) - budget.noise_db


def snr_db(
    distance: float, state: LinkStateType, budget: LinkBudget, params: ChannelParams, rng: np.random.Generator
) -> float:
    return float(snr_from_pathloss(pathloss_db(distance, state, params, rng), budget))


# Block errors


def bit_error_probability(snr, modulation: Modulation):
    """Bit error probability for an SNR in dB, converted to linear before erfc."""
    linear = np.power(10.0, np.asarray(snr, dtype=float) / 10.0)
    if modulation == Modulation.QPSK:
        return 0.5 * erfc(np.sqrt(linear))
    return 0.2917 * erfc(np.sqrt(9.0 * linear / 63.0))


def block_erasure(bit_error, block_length: int):
    """1 - (1 - p_b)^L, evaluated through log1p for small p_b."""
    p_b = np.clip(np.asarray(bit_error, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore"):
        erasure = -np.expm1(block_length * np.log1p(-p_b))
    return np.clip(erasure, 0.0, 1.0)


def erasure_probability(snr, budget: LinkBudget):
    return block_erasure(bit_error_probability(snr, budget.modulation), budget.block_length_bits)


def apply_threshold(erasures, states, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Links above T_e become outage with erasure 1."""
    erasures = np.asarray(erasures, dtype=float).copy()
    states = np.asarray(states).copy()
    cut = (erasures > threshold) | (states == OUTAGE)
    erasures[cut] = 1.0
    states[cut] = OUTAGE
    return erasures, states


# Link matrices


@dataclass
class LinkMatrix:
    """Per (device, relay) link realisation for one direction and one time-span."""

    direction: Direction
    states: np.ndarray
    """State codes, indices into STATE_ORDER"""
    erasures: np.ndarray
    snr_db: np.ndarray
    """NaN where the link is in outage"""

    @property
    def shape(self) -> tuple[int, int]:
        return self.erasures.shape

    @property
    def usable_mask(self) -> np.ndarray:
        return self.erasures < 1.0

    def usable_erasures(self, device: int) -> np.ndarray:
        row = self.erasures[device]
        return row[row < 1.0]

    def state_of(self, device: int, relay: int) -> LinkStateType:
        return STATE_ORDER[int(self.states[device, relay])]

    @property
    def outage_fraction(self) -> float:
        return float((self.states == OUTAGE).mean()) if self.states.size else 0.0


def build_direction_matrix(
    devices: np.ndarray,
    relays: np.ndarray,
    budget: LinkBudget,
    params: ChannelParams,
    rng: np.random.Generator,
    direction: Direction = Direction.DOWNLINK,
) -> LinkMatrix:
    """Sample states and erasures for every device-relay pair, then apply T_e."""
    d = distance_matrix(devices, relays)
    states = sample_link_states(d, params.states, rng)

    loss = np.full(d.shape, np.inf)
    for code, model in ((LOS, params.los), (NLOS, params.nlos)):
        chosen = states == code
        if not chosen.any():
            continue
        dist = np.maximum(d[chosen], params.min_distance_m)
        loss[chosen] = model.alpha + 10.0 * model.beta * np.log10(dist)
        if model.sigma_db > 0:
            loss[chosen] += rng.normal(0.0, model.sigma_db, size=dist.shape)

    snr = np.where(states == OUTAGE, np.nan, snr_from_pathloss(loss, budget))
    with np.errstate(invalid="ignore"):
        erasures = np.where(states == OUTAGE, 1.0, erasure_probability(np.nan_to_num(snr, nan=-np.inf), budget))
    erasures, states = apply_threshold(erasures, states, params.erasure_threshold)
    snr = np.where(states == OUTAGE, np.nan, snr)
    return LinkMatrix(direction, states, erasures, snr)


def build_link_matrix(
    devices: np.ndarray,
    relays: np.ndarray,
    budget_downlink: LinkBudget,
    budget_uplink: LinkBudget,
    params: ChannelParams,
    rng: np.random.Generator,
) -> dict[Direction, LinkMatrix]:
    """Both directions, states sampled independently per direction."""
    return {
        Direction.DOWNLINK: build_direction_matrix(devices, relays, budget_downlink, params, rng, Direction.DOWNLINK),
        Direction.UPLINK: build_direction_matrix(devices, relays, budget_uplink, params, rng, Direction.UPLINK),
    }
