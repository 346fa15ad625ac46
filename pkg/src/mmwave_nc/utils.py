import math
from typing import Iterable, Iterator, Sequence, TypeVar

import numpy as np

from mmwave_nc.types import UNDEFINED, Campaign

T = TypeVar("T")


def make_rng(base_seed: int, campaign: Campaign, *indices: int) -> np.random.Generator:
    """Independent stream for one unit of work.

    The stream is seeded by SeedSequence([base_seed, campaign, *indices]), so it
    depends only on the unit's position in the sweep and never on worker count
    or completion order.
    """
    return np.random.default_rng(np.random.SeedSequence([base_seed, int(campaign), *indices]))


def chunked(items: Sequence[T], size: int) -> Iterator[Sequence[T]]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def nearest_rank_quantiles(values: Iterable[float], levels: Sequence[float]) -> list[float]:
    """Smallest sample x with at least a fraction `level` of samples <= x. NaNs are ignored."""
    data = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if data.size == 0:
        return [math.nan] * len(levels)
    return [float(v) for v in np.percentile(data, [100.0 * level for level in levels], method="inverted_cdf")]


def nan_median(values: Iterable[float]) -> float:
    data = np.asarray(list(values), dtype=float)
    if data.size == 0 or np.all(np.isnan(data)):
        return math.nan
    return float(np.nanmedian(data))


def relative_gain(coded: float, forwarding: float) -> float:
    """coded / forwarding - 1."""
    if not forwarding or math.isnan(forwarding) or math.isnan(coded):
        return math.nan
    return coded / forwarding - 1.0


def traffic_reduction(bkeff_forwarding: float, bkeff_coded: float) -> float:
    """Share of backhaul transmissions saved by coding, 1 - bkEff_F / bkEff_C."""
    if not bkeff_coded or math.isnan(bkeff_coded) or math.isnan(bkeff_forwarding):
        return math.nan
    return 1.0 - bkeff_forwarding / bkeff_coded


def format_value(value) -> str:
    """CSV cell text: floats by repr so reruns are byte-identical, None as the undefined marker."""
    if value is None:
        return UNDEFINED
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)
