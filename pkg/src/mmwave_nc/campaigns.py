"""Seeded campaigns: bound tables, downlink and uplink simulations, singularity validation.

Work is split into units whose random streams depend only on their position in
the sweep (see ``utils.make_rng``). Units run in-process or on a process pool and
their results are merged in unit order, so the output does not depend on the
number of workers.
"""

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from mmwave_nc.bounds import (
    bkeff_forwarding_symmetric,
    bkeff_nc_lb,
    eff_forwarding,
    eff_forwarding_ub,
    eff_nc_lb,
    feasible_p_range,
    phi_exact,
    phi_oracle,
    phi_ub,
)
from mmwave_nc.channel import build_direction_matrix
from mmwave_nc.deployment import device_groups, drop_devices, place_relays
from mmwave_nc.errors import ErrorMessages, InfeasibleBoundError
from mmwave_nc.gf import get_field
from mmwave_nc.logging_config import UnitProgress, get_logger, project_level, setup_worker_logging
from mmwave_nc.models import DownlinkScenario, ExperimentConfig
from mmwave_nc.results import write_csv
from mmwave_nc.shared import Settings, get_settings
from mmwave_nc.sim import SchemeTotals, fixed_uplink, simulate_downlink_span, simulate_uplink_span
from mmwave_nc.types import CDF_LEVELS, Campaign, Direction, Scheme
from mmwave_nc.utils import chunked, make_rng, nan_median, nearest_rank_quantiles, relative_gain, traffic_reduction

logger = get_logger(__name__)

U = TypeVar("U")
R = TypeVar("R")

DEVICE_CHUNK = 50
"""Devices per downlink work unit"""
GROUP_CHUNK = 25
"""Device groups per uplink work unit"""
EXACT_PHI_LIMIT = 4096
"""Largest number of matrices enumerated for the exact phi column"""

# Stream index 0 of each (sweep point, replication) drops devices; unit c uses 1 + c
DROP_STREAM = 0


@dataclass
class CampaignResult:
    """Files written by a campaign plus a summary table for the console."""

    campaign: Campaign
    files: list[Path] = field(default_factory=list)
    summary_headers: list[str] = field(default_factory=list)
    summary_rows: list[list] = field(default_factory=list)
    undefined_cells: int = 0


def map_units(fn: Callable[[U], R], units: Sequence[U], workers: int, label: str = "campaign") -> list[R]:
    """Apply fn to every unit, results in unit order whatever the completion order."""
    progress = UnitProgress(label, len(units), logger)
    results: list[R] = []
    if workers <= 1 or len(units) <= 1:
        for unit in units:
            results.append(fn(unit))
            progress.advance()
        return results
    with ProcessPoolExecutor(
        max_workers=workers, initializer=setup_worker_logging, initargs=(project_level(),)
    ) as pool:
        for result in pool.map(fn, units):
            results.append(result)
            progress.advance()
    return results


def _efficiency_pair(totals: dict[Scheme, SchemeTotals], attr: str) -> tuple[float, float]:
    f = getattr(totals[Scheme.FORWARDING], attr) if Scheme.FORWARDING in totals else math.nan
    c = getattr(totals[Scheme.NETWORK_CODING], attr) if Scheme.NETWORK_CODING in totals else math.nan
    return f, c


# Bound tables


def _downlink_bound_rows(config: ExperimentConfig) -> list[list]:
    bounds = config.bounds
    rows = []
    for p_low, p_high in bounds.erasure_pairs:
        for n in range(1, bounds.max_relays + 1):
            scenarios = {
                "symmetric_low": DownlinkScenario.symmetric(bounds.k, n, p_low),
                "symmetric_high": DownlinkScenario.symmetric(bounds.k, n, p_high),
                "single_low": DownlinkScenario.single_low(bounds.k, n, p_low, p_high),
                "single_high": DownlinkScenario.single_high(bounds.k, n, p_low, p_high),
            }
            for name, scenario in scenarios.items():
                f_ub = eff_forwarding_ub(scenario)
                nc_lb = eff_nc_lb(scenario)
                rows.append([p_low, p_high, name, n, bounds.k, eff_forwarding(scenario), f_ub, nc_lb, nc_lb - f_ub])
    return rows


@dataclass(frozen=True)
class BackhaulSimUnit:
    config: ExperimentConfig
    index: int
    z: int
    p: float


def _run_backhaul_sim(unit: BackhaulSimUnit) -> dict[Scheme, SchemeTotals]:
    config = unit.config
    bounds = config.bounds
    rng = make_rng(config.seed, Campaign.BOUNDS, unit.index)
    erasures = np.full((unit.z, bounds.backhaul_relays), unit.p)
    return fixed_uplink(erasures, bounds.simulate_spans, get_field(bounds.field_size), rng, config.uplink_nc_mode)


def run_bounds_figures(
    config: ExperimentConfig,
    out_dir: Optional[str | Path] = None,
    allow_undefined: bool = False,
    settings: Optional[Settings] = None,
) -> CampaignResult:
    """Downlink bound curves against N and symmetric backhaul bounds against p.

    Raises InfeasibleBoundError when some backhaul cell is undefined and
    ``allow_undefined`` is not set; nothing is written in that case.
    """
    settings = settings or get_settings()
    out = Path(out_dir or config.output_dir)
    bounds = config.bounds
    result = CampaignResult(Campaign.BOUNDS)

    cells = list(itertools.product(bounds.code_lengths, bounds.p_grid))
    backhaul = [bkeff_nc_lb(z, bounds.field_size, p, bounds.backhaul_relays, bounds.series) for z, p in cells]
    result.undefined_cells = sum(1 for b in backhaul if not b.defined)
    if result.undefined_cells and not allow_undefined:
        raise InfeasibleBoundError(
            f"{ErrorMessages.INFEASIBLE} for {result.undefined_cells} cells; pass --allow-undefined to write them"
        )

    simulated: list[Optional[dict[Scheme, SchemeTotals]]] = [None] * len(cells)
    if bounds.simulate_spans > 0:
        units = [BackhaulSimUnit(config, i, z, p) for i, (z, p) in enumerate(cells) if p < 1.0]
        for unit, totals in zip(units, map_units(_run_backhaul_sim, units, settings.workers, "bounds")):
            simulated[unit.index] = totals

    result.files.append(
        write_csv(
            out / "downlink_bounds.csv",
            ["p_low", "p_high", "scenario", "n_relays", "k", "eff_forwarding", "eff_forwarding_ub", "eff_nc_lb", "gap"],
            _downlink_bound_rows(config),
            config,
            Campaign.BOUNDS,
            "downlink efficiency bounds against the number of relays",
        )
    )

    rows = []
    for bound, sim in zip(backhaul, simulated):
        row = [
            bound.z,
            bound.q,
            bound.n_relays,
            bound.p,
            bound.phi_ub,
            bound.beta,
            bound.value,
            bkeff_forwarding_symmetric(bound.n_relays, bound.p) if bound.p < 1.0 else None,
        ]
        if bounds.simulate_spans > 0:
            if sim is None:
                row += ["", "", "", ""]
            else:
                f, c = sim[Scheme.FORWARDING].backhaul, sim[Scheme.NETWORK_CODING].backhaul
                row += [f.ratio, f.standard_error, c.ratio, c.standard_error]
        rows.append(row)
    headers = ["z", "q", "n_relays", "p", "phi_ub", "beta_nc", "bkeff_nc_lb", "bkeff_forwarding"]
    if bounds.simulate_spans > 0:
        headers += ["sim_bkeff_forwarding", "sim_bkeff_forwarding_se", "sim_bkeff_nc", "sim_bkeff_nc_se"]
    result.files.append(
        write_csv(
            out / "backhaul_bounds.csv",
            headers,
            rows,
            config,
            Campaign.BOUNDS,
            "symmetric uplink backhaul efficiency against erasure probability",
        )
    )

    result.summary_headers = ["z", "q", "feasible p up to", "undefined cells"]
    for z in bounds.code_lengths:
        frontier = feasible_p_range(z, bounds.field_size)
        undefined = sum(1 for b in backhaul if b.z == z and not b.defined)
        result.summary_rows.append([z, bounds.field_size, frontier, undefined])
    return result


# Downlink campaign


@dataclass(frozen=True)
class DownlinkUnit:
    config: ExperimentConfig
    spacing_index: int
    replication: int
    chunk_index: int
    device_ids: tuple[int, ...]
    devices: np.ndarray
    relays: np.ndarray


@dataclass
class DeviceRecord:
    device: int
    totals: dict[Scheme, SchemeTotals]


def _run_downlink_unit(unit: DownlinkUnit) -> list[DeviceRecord]:
    config = unit.config
    rng = make_rng(config.seed, Campaign.DOWNLINK, unit.spacing_index, unit.replication, 1 + unit.chunk_index)
    field = get_field(config.field_size)
    k = config.timespan.k
    totals = [{scheme: SchemeTotals() for scheme in config.schemes} for _ in unit.device_ids]
    for _ in range(config.timespan.spans):
        links = build_direction_matrix(
            unit.devices, unit.relays, config.downlink_budget, config.channel, rng, Direction.DOWNLINK
        )
        for i in range(len(unit.device_ids)):
            for scheme, run in simulate_downlink_span(k, links.erasures[i], rng, field, config.schemes).items():
                totals[i][scheme].add(run)
    return [DeviceRecord(device, t) for device, t in zip(unit.device_ids, totals)]


def run_downlink_campaign(
    config: ExperimentConfig, out_dir: Optional[str | Path] = None, settings: Optional[Settings] = None
) -> CampaignResult:
    """Per-device downlink efficiency and delay for every relay spacing."""
    settings = settings or get_settings()
    out = Path(out_dir or config.output_dir)
    result = CampaignResult(Campaign.DOWNLINK)

    units: list[DownlinkUnit] = []
    for spacing_index, spacing in enumerate(config.relay_spacings):
        scenario = config.scenario.model_copy(update={"relay_spacing": spacing})
        relays = place_relays(scenario)
        for replication in range(config.replications):
            drop_rng = make_rng(config.seed, Campaign.DOWNLINK, spacing_index, replication, DROP_STREAM)
            devices = drop_devices(scenario, drop_rng)
            ids = list(range(devices.shape[0]))
            for chunk_index, chunk in enumerate(chunked(ids, DEVICE_CHUNK)):
                units.append(
                    DownlinkUnit(config, spacing_index, replication, chunk_index, tuple(chunk), devices[chunk], relays)
                )
    logger.info(f"Downlink campaign: {len(units)} units over {len(config.relay_spacings)} relay spacings")
    records = map_units(_run_downlink_unit, units, settings.workers, "downlink")

    device_rows, cdf_rows = [], []
    result.summary_headers = [
        "D_R",
        "devices",
        "outage devices",
        "median eff F",
        "median eff NC",
        "median gain",
        "median delay F",
        "median delay NC",
    ]
    for spacing_index, spacing in enumerate(config.relay_spacings):
        per_scheme: dict[Scheme, dict[str, list[float]]] = {s: {"efficiency": [], "delay": []} for s in config.schemes}
        gains: list[float] = []
        devices = outage_devices = 0
        for unit, unit_records in zip(units, records):
            if unit.spacing_index != spacing_index:
                continue
            for record in unit_records:
                devices += 1
                if all(t.counted_spans == 0 for t in record.totals.values()):
                    outage_devices += 1
                for scheme, t in record.totals.items():
                    device_rows.append(
                        [
                            spacing,
                            unit.replication,
                            record.device,
                            scheme.value,
                            t.efficiency,
                            t.air.standard_error,
                            t.mean_delay,
                            t.counted_spans,
                            t.outage_spans,
                        ]
                    )
                    if t.counted_spans:
                        per_scheme[scheme]["efficiency"].append(t.efficiency)
                        per_scheme[scheme]["delay"].append(t.mean_delay)
                f, c = _efficiency_pair(record.totals, "efficiency")
                gains.append(relative_gain(c, f))

        for scheme, metrics in per_scheme.items():
            for metric, values in metrics.items():
                for level, value in zip(CDF_LEVELS, nearest_rank_quantiles(values, CDF_LEVELS)):
                    cdf_rows.append([spacing, scheme.value, metric, level, value])

        def median_of(scheme: Scheme, metric: str) -> float:
            return nan_median(per_scheme[scheme][metric]) if scheme in per_scheme else math.nan

        summary = [
            spacing,
            devices,
            outage_devices,
            median_of(Scheme.FORWARDING, "efficiency"),
            median_of(Scheme.NETWORK_CODING, "efficiency"),
            nan_median(gains),
            median_of(Scheme.FORWARDING, "delay"),
            median_of(Scheme.NETWORK_CODING, "delay"),
        ]
        result.summary_rows.append(summary)
        if outage_devices:
            logger.warning(f"D_R={spacing}: {outage_devices} of {devices} devices had no usable link in any span")

    result.files.append(
        write_csv(
            out / "downlink_devices.csv",
            [
                "relay_spacing",
                "replication",
                "device",
                "scheme",
                "efficiency",
                "efficiency_se",
                "mean_delay",
                "counted_spans",
                "outage_spans",
            ],
            device_rows,
            config,
            Campaign.DOWNLINK,
            "per-device efficiency over time-spans",
        )
    )
    result.files.append(
        write_csv(
            out / "downlink_cdf.csv",
            ["relay_spacing", "scheme", "metric", "level", "value"],
            cdf_rows,
            config,
            Campaign.DOWNLINK,
            "nearest-rank quantiles over devices",
        )
    )
    result.files.append(
        write_csv(
            out / "downlink_summary.csv",
            [
                "relay_spacing",
                "devices",
                "outage_devices",
                "median_eff_forwarding",
                "median_eff_nc",
                "median_gain",
                "median_delay_forwarding",
                "median_delay_nc",
            ],
            result.summary_rows,
            config,
            Campaign.DOWNLINK,
        )
    )
    return result


# Uplink campaign


@dataclass(frozen=True)
class UplinkUnit:
    config: ExperimentConfig
    spacing_index: int
    z_index: int
    replication: int
    chunk_index: int
    group_ids: tuple[int, ...]
    groups: np.ndarray
    """Shape (groups, z, 2), device positions per group"""
    relays: np.ndarray


@dataclass
class GroupRecord:
    group: int
    totals: dict[Scheme, SchemeTotals]
    excluded_devices: int


def _run_uplink_unit(unit: UplinkUnit) -> list[GroupRecord]:
    config = unit.config
    rng = make_rng(
        config.seed, Campaign.UPLINK, unit.spacing_index, unit.z_index, unit.replication, 1 + unit.chunk_index
    )
    field = get_field(config.field_size)
    n_groups, z = unit.groups.shape[:2]
    positions = unit.groups.reshape(-1, 2)
    totals = [{scheme: SchemeTotals() for scheme in config.schemes} for _ in range(n_groups)]
    excluded = [0] * n_groups
    for _ in range(config.timespan.spans):
        links = build_direction_matrix(positions, unit.relays, config.uplink_budget, config.channel, rng, Direction.UPLINK)
        for g in range(n_groups):
            span = simulate_uplink_span(
                links.erasures[g * z : (g + 1) * z], rng, field, config.uplink_nc_mode, config.schemes
            )
            excluded[g] += span.excluded_devices
            for scheme, run in span.runs.items():
                totals[g][scheme].add(run)
    return [GroupRecord(group, t, e) for group, t, e in zip(unit.group_ids, totals, excluded)]


def run_uplink_campaign(
    config: ExperimentConfig, out_dir: Optional[str | Path] = None, settings: Optional[Settings] = None
) -> CampaignResult:
    """Per-group backhaul efficiency for every relay spacing and code length."""
    settings = settings or get_settings()
    out = Path(out_dir or config.output_dir)
    result = CampaignResult(Campaign.UPLINK)

    units: list[UplinkUnit] = []
    for spacing_index, spacing in enumerate(config.relay_spacings):
        scenario = config.scenario.model_copy(update={"relay_spacing": spacing})
        relays = place_relays(scenario)
        for z_index, z in enumerate(config.uplink_code_lengths):
            for replication in range(config.replications):
                drop_rng = make_rng(config.seed, Campaign.UPLINK, spacing_index, z_index, replication, DROP_STREAM)
                devices = drop_devices(scenario, drop_rng)
                groups = device_groups(devices, z, config.grouping, drop_rng)
                ids = list(range(len(groups)))
                for chunk_index, chunk in enumerate(chunked(ids, GROUP_CHUNK)):
                    positions = np.stack([devices[groups[g]] for g in chunk])
                    units.append(
                        UplinkUnit(
                            config, spacing_index, z_index, replication, chunk_index, tuple(chunk), positions, relays
                        )
                    )
    logger.info(f"Uplink campaign: {len(units)} units, grouping {config.grouping.value}")
    records = map_units(_run_uplink_unit, units, settings.workers, "uplink")

    group_rows, cdf_rows = [], []
    result.summary_headers = [
        "D_R",
        "z",
        "groups",
        "median bkEff F",
        "median bkEff NC",
        "median gain",
        "traffic reduction",
        "excluded",
        "undecodable",
    ]
    for (spacing_index, spacing), (z_index, z) in itertools.product(
        enumerate(config.relay_spacings), enumerate(config.uplink_code_lengths)
    ):
        per_scheme: dict[Scheme, list[float]] = {s: [] for s in config.schemes}
        gains: list[float] = []
        reductions: list[float] = []
        groups = excluded = undecodable = 0
        for unit, unit_records in zip(units, records):
            if (unit.spacing_index, unit.z_index) != (spacing_index, z_index):
                continue
            for record in unit_records:
                groups += 1
                excluded += record.excluded_devices
                for scheme, t in record.totals.items():
                    undecodable += t.undecodable_spans
                    group_rows.append(
                        [
                            spacing,
                            z,
                            unit.replication,
                            record.group,
                            scheme.value,
                            t.backhaul_efficiency,
                            t.backhaul.standard_error,
                            t.counted_spans,
                            t.outage_spans,
                            t.undecodable_spans,
                            record.excluded_devices,
                        ]
                    )
                    if t.backhaul.n:
                        per_scheme[scheme].append(t.backhaul_efficiency)
                f, c = _efficiency_pair(record.totals, "backhaul_efficiency")
                gains.append(relative_gain(c, f))
                reductions.append(traffic_reduction(f, c))

        for scheme, values in per_scheme.items():
            for level, value in zip(CDF_LEVELS, nearest_rank_quantiles(values, CDF_LEVELS)):
                cdf_rows.append([spacing, z, scheme.value, level, value])

        result.summary_rows.append(
            [
                spacing,
                z,
                groups,
                nan_median(per_scheme.get(Scheme.FORWARDING, [])),
                nan_median(per_scheme.get(Scheme.NETWORK_CODING, [])),
                nan_median(gains),
                nan_median(reductions),
                excluded,
                undecodable,
            ]
        )
        if undecodable:
            logger.warning(f"D_R={spacing}, z={z}: {undecodable} undecodable spans")

    result.files.append(
        write_csv(
            out / "uplink_groups.csv",
            [
                "relay_spacing",
                "z",
                "replication",
                "group",
                "scheme",
                "backhaul_efficiency",
                "backhaul_efficiency_se",
                "counted_spans",
                "outage_spans",
                "undecodable_spans",
                "excluded_devices",
            ],
            group_rows,
            config,
            Campaign.UPLINK,
            "per-group backhaul efficiency over time-spans",
        )
    )
    result.files.append(
        write_csv(
            out / "uplink_cdf.csv",
            ["relay_spacing", "z", "scheme", "level", "value"],
            cdf_rows,
            config,
            Campaign.UPLINK,
            "nearest-rank quantiles over device groups",
        )
    )
    result.files.append(
        write_csv(
            out / "uplink_summary.csv",
            [
                "relay_spacing",
                "z",
                "groups",
                "median_bkeff_forwarding",
                "median_bkeff_nc",
                "median_gain",
                "traffic_reduction",
                "excluded_devices",
                "undecodable_spans",
            ],
            result.summary_rows,
            config,
            Campaign.UPLINK,
        )
    )
    return result


# Singularity validation


@dataclass(frozen=True)
class PhiUnit:
    seed: int
    index: int
    z: int
    q: int
    p: float
    trials: int


def _run_phi_unit(unit: PhiUnit) -> list:
    rng = make_rng(unit.seed, Campaign.PHI, unit.index)
    estimate = phi_oracle(unit.z, unit.q, unit.p, unit.trials, rng)
    bound = phi_ub(unit.z, unit.q, unit.p)
    feasible = bound < 1.0
    exact = phi_exact(unit.z, unit.q, unit.p) if unit.q ** (unit.z * unit.z) <= EXACT_PHI_LIMIT else ""
    within = estimate.phi <= bound + 3 * estimate.phi_se if feasible else ""
    return [
        unit.z,
        unit.q,
        unit.p,
        estimate.phi,
        estimate.phi_se,
        estimate.mean_defect,
        estimate.defect_se,
        bound,
        feasible,
        exact,
        within,
    ]


def run_phi_validation(
    config: ExperimentConfig, out_dir: Optional[str | Path] = None, settings: Optional[Settings] = None
) -> CampaignResult:
    """Empirical singularity probability next to its analytic bound on the configured grid."""
    settings = settings or get_settings()
    out = Path(out_dir or config.output_dir)
    phi = config.phi
    cells = list(itertools.product(phi.code_lengths, phi.field_sizes, phi.p_grid))
    units = [PhiUnit(config.seed, i, z, q, p, phi.trials) for i, (z, q, p) in enumerate(cells)]
    logger.info(f"Phi validation: {len(units)} cells, {phi.trials} trials each")
    rows = map_units(_run_phi_unit, units, settings.workers, "phi")

    result = CampaignResult(Campaign.PHI)
    result.files.append(
        write_csv(
            out / "phi_validation.csv",
            [
                "z",
                "q",
                "p",
                "phi_hat",
                "phi_se",
                "mean_defect",
                "defect_se",
                "phi_ub",
                "feasible",
                "phi_exact",
                "within_bound",
            ],
            rows,
            config,
            Campaign.PHI,
            "singularity probability of sparse random square matrices",
        )
    )
    result.summary_headers = ["z", "q", "p", "phi_hat", "phi_ub", "within bound"]
    result.summary_rows = [[r[0], r[1], r[2], r[3], r[7], r[10]] for r in rows]
    violations = sum(1 for r in rows if r[10] is False)
    if violations:
        logger.warning(f"{violations} feasible cells exceed phi_ub by more than 3 standard errors")
    return result
