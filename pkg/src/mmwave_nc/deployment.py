"""Street canyon topology: staggered relays on both edges, devices on the sidewalks."""

import numpy as np

from mmwave_nc.logging_config import get_logger
from mmwave_nc.models import StreetScenario
from mmwave_nc.types import GroupingPolicy

logger = get_logger(__name__)


def place_relays(scenario: StreetScenario) -> np.ndarray:
    """Relay positions, shape (N_R, 2). Side A at y=0 from x=0, side B at y=w_s shifted by D_R/2."""
    spacing = scenario.relay_spacing
    side_a = [(i * spacing, 0.0) for i in range(scenario.relays_side_a)]
    side_b = [(i * spacing + spacing / 2, scenario.street_width) for i in range(scenario.relays_side_b)]
    return np.array(side_a + side_b, dtype=float).reshape(-1, 2)


def drop_devices(scenario: StreetScenario, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Devices uniform along the street, side chosen uniformly, shape (N_ue, 2)."""
    n = scenario.n_devices if count is None else count
    x = rng.uniform(0.0, scenario.street_length, size=n)
    far_side = rng.random(size=n) < 0.5
    y = np.where(far_side, scenario.street_width - scenario.sidewalk_offset, scenario.sidewalk_offset)
    return np.column_stack((x, y)).reshape(-1, 2)


def distance(a, b) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances, shape (len(a), len(b))."""
    a = np.asarray(a, dtype=float).reshape(-1, 2)
    b = np.asarray(b, dtype=float).reshape(-1, 2)
    return np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])


def device_groups(positions: np.ndarray, z: int, policy: GroupingPolicy, rng: np.random.Generator) -> list[list[int]]:
    """Partition device indices into sessions of z; a trailing partial group is dropped.

    Proximity takes a random unassigned anchor and its z-1 nearest unassigned devices.
    """
    n = positions.shape[0]
    if policy == GroupingPolicy.RANDOM:
        order = rng.permutation(n)
        return [sorted(order[i : i + z].tolist()) for i in range(0, n - z + 1, z)]

    unassigned = np.ones(n, dtype=bool)
    groups: list[list[int]] = []
    while unassigned.sum() >= z:
        candidates = np.flatnonzero(unassigned)
        anchor = int(rng.choice(candidates))
        reach = distance_matrix(positions[anchor], positions[candidates])[0]
        nearest = candidates[np.argsort(reach, kind="stable")[:z]]
        unassigned[nearest] = False
        groups.append(sorted(int(i) for i in nearest))
    if unassigned.any():
        logger.debug(f"{int(unassigned.sum())} devices left without a group of {z}")
    return groups
