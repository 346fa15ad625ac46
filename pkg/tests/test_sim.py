import math
import unittest

import numpy as np
import pytest

from mmwave_nc.bounds import bkeff_forwarding_symmetric, bkeff_nc_lb, eff_forwarding
from mmwave_nc.errors import UndecodableSpanError
from mmwave_nc.gf import get_field
from mmwave_nc.models import DownlinkScenario
from mmwave_nc.rlnc import Generation
from mmwave_nc.sim import (
    RatioEstimate,
    RunMetrics,
    SchemeTotals,
    downlink_forwarding,
    downlink_nc,
    fixed_downlink,
    fixed_uplink,
    simulate_downlink_span,
    simulate_uplink_span,
    uplink_device_phase,
    uplink_forwarding_backhaul,
    uplink_nc_backhaul,
)
from mmwave_nc.types import Scheme, UplinkNcMode


class TestDownlink(unittest.TestCase):
    def setUp(self):
        self.field = get_field(1024)
        self.rng = np.random.default_rng(3)

    def test_error_free_forwarding(self):
        run = downlink_forwarding(8, [0.0, 0.0, 0.0], self.rng)
        self.assertEqual(run.air_transmissions, 8)
        self.assertEqual(run.efficiency, 1.0)
        self.assertEqual(run.slots_to_complete, 8)

    def test_error_free_nc(self):
        run = downlink_nc(8, [0.0, 0.0], self.rng, self.field)
        # a uniform GF(1024) vector is non-innovative with probability below 1e-2 per packet
        self.assertGreaterEqual(run.air_transmissions, 8)
        self.assertLessEqual(run.air_transmissions, 10)

    def test_no_usable_link_is_outage(self):
        for run in simulate_downlink_span(4, [1.0, 1.0], self.rng, self.field).values():
            self.assertTrue(run.outage)
            self.assertFalse(run.counted)
            self.assertTrue(math.isnan(run.efficiency))

    def test_outage_relays_are_skipped(self):
        run = downlink_forwarding(5, [1.0, 0.0], self.rng)
        self.assertEqual(run.air_transmissions, 5)

    def test_nc_decodes_payloads(self):
        gen = Generation.random(self.field, 4, 3, self.rng)
        run = downlink_nc(4, [0.3, 0.5], self.rng, self.field, gen)
        self.assertEqual(run.packets_delivered, 4)


def test_forwarding_mean_single_relay(rng):
    # k=1, N=1, p=0.5: geometric mean of 2 transmissions
    totals = SchemeTotals()
    for _ in range(20000):
        totals.add(downlink_forwarding(1, [0.5], rng))
    assert 1.0 / totals.efficiency == pytest.approx(2.0, abs=4 * 4 * totals.air.standard_error)


def test_nc_single_relay_k1(gf1024, rng):
    totals = SchemeTotals()
    for _ in range(3000):
        totals.add(downlink_nc(1, [0.5], rng, gf1024))
    assert totals.efficiency == pytest.approx(0.5, abs=4 * totals.air.standard_error)


def test_forwarding_matches_closed_form_when_n_divides_k(gf1024, rng):
    scenario = DownlinkScenario(k=4, erasures=[0.2, 0.5])
    totals = fixed_downlink(4, scenario.erasures, 5000, gf1024, rng, [Scheme.FORWARDING])[Scheme.FORWARDING]
    assert abs(totals.efficiency - eff_forwarding(scenario)) < 4 * totals.air.standard_error


def test_symmetric_sandwich(gf1024, rng):
    p = 0.3
    totals = fixed_downlink(4, [p] * 4, 1500, gf1024, rng)
    forwarding, coded = totals[Scheme.FORWARDING], totals[Scheme.NETWORK_CODING]
    assert forwarding.efficiency <= 1 - p + 4 * forwarding.air.standard_error
    assert coded.efficiency >= 1 - p - 4 * coded.air.standard_error


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7])
@pytest.mark.parametrize("n", [2, 4, 8])
@pytest.mark.parametrize("k", [4, 8])
def test_symmetric_sandwich_grid(p, n, k, gf1024):
    rng = np.random.default_rng([17, n, k, int(p * 10)])
    totals = fixed_downlink(k, [p] * n, 10000, gf1024, rng)
    forwarding, coded = totals[Scheme.FORWARDING], totals[Scheme.NETWORK_CODING]
    # 4 standard errors: 24 cells are checked together
    assert forwarding.efficiency <= 1 - p + 4 * forwarding.air.standard_error
    assert coded.efficiency >= 1 - p - 4 * coded.air.standard_error


@pytest.mark.slow
def test_forwarding_matches_closed_form_random_scenarios(gf1024):
    rng = np.random.default_rng(99)
    for _ in range(20):
        n = int(rng.integers(1, 6))
        k = n * int(rng.integers(1, 4))
        scenario = DownlinkScenario(k=k, erasures=rng.uniform(0.0, 0.8, size=n).round(3).tolist())
        totals = fixed_downlink(k, scenario.erasures, 10000, gf1024, rng, [Scheme.FORWARDING])[Scheme.FORWARDING]
        assert abs(totals.efficiency - eff_forwarding(scenario)) < 4 * totals.air.standard_error


@pytest.mark.parametrize("p_low,p_high", [(0.1, 0.6), (0.1, 0.9)])
@pytest.mark.parametrize("builder", [DownlinkScenario.single_low, DownlinkScenario.single_high])
def test_nc_median_slots_not_above_forwarding(builder, p_low, p_high, gf1024):
    scenario = builder(8, 4, p_low, p_high)
    rng = np.random.default_rng([37, int(p_high * 10)])
    slots = {Scheme.FORWARDING: [], Scheme.NETWORK_CODING: []}
    for _ in range(600):
        for scheme, run in simulate_downlink_span(8, scenario.erasures, rng, gf1024).items():
            slots[scheme].append(run.slots_to_complete)
    assert np.median(slots[Scheme.NETWORK_CODING]) <= np.median(slots[Scheme.FORWARDING])


@pytest.mark.parametrize("q", [16, 1024])
def test_nc_overhead_on_perfect_links(q):
    # only non-innovative packets cost extra: k (1 + 2 / q) is a loose ceiling
    field = get_field(q)
    totals = fixed_downlink(8, [0.0, 0.0, 0.0], 2000, field, np.random.default_rng([43, q]), [Scheme.NETWORK_CODING])
    coded = totals[Scheme.NETWORK_CODING]
    assert 8.0 <= coded.mean_delay <= 8 * (1 + 2 / q)
    assert coded.air.sx / coded.counted_spans <= 8 * (1 + 2 / q)


# Uplink


class TestDevicePhase(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.default_rng(4)

    def test_error_free(self):
        phase = uplink_device_phase(np.zeros((3, 2)), self.rng)
        self.assertEqual(phase.air_transmissions, 3)
        self.assertTrue(phase.masks.all())

    def test_excluded_device(self):
        phase = uplink_device_phase(np.array([[1.0, 1.0], [0.0, 1.0]]), self.rng)
        self.assertEqual(phase.excluded, [0])
        self.assertEqual(phase.connected, [1])
        self.assertEqual(phase.masks.tolist(), [[True], [False]])

    def test_every_device_reaches_a_relay(self):
        phase = uplink_device_phase(np.full((6, 3), 0.7), self.rng)
        self.assertTrue(phase.masks.any(axis=0).all())


def test_device_attempts_mean(rng):
    attempts = [uplink_device_phase(np.array([[0.5, 0.5]]), rng).air_transmissions for _ in range(20000)]
    mean, se = np.mean(attempts), np.std(attempts, ddof=1) / np.sqrt(len(attempts))
    assert mean == pytest.approx(4 / 3, abs=4 * se)


def test_forwarding_backhaul_counts_every_copy():
    assert uplink_forwarding_backhaul(np.ones((4, 3), dtype=bool)) == 12
    assert uplink_forwarding_backhaul(np.eye(3, dtype=bool)) == 3
    assert uplink_forwarding_backhaul(np.zeros((2, 3), dtype=bool)) == 0


def test_nc_backhaul_one_relay_holds_all(gf1024, rng):
    masks = np.array([[True] * 4, [False] * 4])
    assert uplink_nc_backhaul(masks, gf1024, rng) == 4


def test_nc_backhaul_distinct_relays(gf1024, rng):
    assert uplink_nc_backhaul(np.eye(4, dtype=bool), gf1024, rng) == 4


def test_nc_backhaul_skips_redundant_relay(gf1024, rng):
    # relays 1 and 2 both hold only packet 0; the second copy is never sent
    masks = np.array([[False, True], [True, False], [True, False]])
    assert uplink_nc_backhaul(masks, gf1024, rng) == 2


def test_nc_backhaul_everyone_holds_everything(gf1024, rng):
    sent = uplink_nc_backhaul(np.ones((4, 4), dtype=bool), gf1024, rng)
    assert 4 <= sent <= 5


def test_nc_backhaul_parallel_rounds(gf1024, rng):
    # N > z: every relay that can add rank transmits in the first round
    sent = uplink_nc_backhaul(np.ones((8, 2), dtype=bool), gf1024, rng, UplinkNcMode.PARALLEL)
    assert sent >= 8


def test_nc_backhaul_opening_round_sends_from_every_holder(gf1024, rng):
    # N > z: all eight relays transmit before the network can stop them
    assert uplink_nc_backhaul(np.ones((8, 2), dtype=bool), gf1024, rng, UplinkNcMode.OPENING_ROUND) == 8


def test_nc_backhaul_opening_round_sends_redundant_copy(gf1024, rng):
    masks = np.array([[False, True], [True, False], [True, False]])
    assert uplink_nc_backhaul(masks, gf1024, rng, UplinkNcMode.OPENING_ROUND) == 3


def test_nc_backhaul_opening_round_then_sequential(gf1024, rng):
    masks = np.array([[True] * 4, [False] * 4])
    assert uplink_nc_backhaul(masks, gf1024, rng, UplinkNcMode.OPENING_ROUND) == 4
    sent = uplink_nc_backhaul(np.ones((3, 5), dtype=bool), gf1024, rng, UplinkNcMode.OPENING_ROUND)
    assert 5 <= sent <= 6


def test_opening_round_gain_grows_with_code_length(gf1024):
    # six relays: z = 4 pays for six opening packets, z = 8 only for its own eight
    gains = {}
    for z in (4, 8):
        rng = np.random.default_rng([31, z])
        totals = fixed_uplink(np.full((z, 6), 0.3), 300, gf1024, rng, UplinkNcMode.OPENING_ROUND)
        coded = totals[Scheme.NETWORK_CODING].backhaul_efficiency
        gains[z] = coded / totals[Scheme.FORWARDING].backhaul_efficiency - 1
    assert gains[8] > gains[4] + 0.5


def test_nc_backhaul_uncovered_packet(gf1024, rng):
    with pytest.raises(UndecodableSpanError):
        uplink_nc_backhaul(np.array([[True, False]]), gf1024, rng)


def test_z1_schemes(gf1024, rng):
    span = simulate_uplink_span(np.zeros((1, 3)), rng, gf1024)
    assert span.runs[Scheme.NETWORK_CODING].backhaul_transmissions == 1
    assert span.runs[Scheme.FORWARDING].backhaul_transmissions == 3


def test_uplink_span_all_outage(gf1024, rng):
    span = simulate_uplink_span(np.ones((2, 2)), rng, gf1024)
    assert span.excluded_devices == 2
    assert all(run.outage for run in span.runs.values())


def test_uplink_forwarding_near_approximation(gf1024, rng):
    p, n = 0.3, 4
    totals = fixed_uplink(np.full((4, n), p), 1500, gf1024, rng, schemes=[Scheme.FORWARDING])
    simulated = totals[Scheme.FORWARDING].backhaul_efficiency
    assert simulated == pytest.approx(bkeff_forwarding_symmetric(n, p), rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])
@pytest.mark.parametrize("z", [4, 12])
@pytest.mark.parametrize("n", [4, 8])
def test_uplink_forwarding_approximation_grid(p, z, n, gf1024):
    rng = np.random.default_rng([23, z, n, int(p * 10)])
    totals = fixed_uplink(np.full((z, n), p), 3000, gf1024, rng, schemes=[Scheme.FORWARDING])
    assert totals[Scheme.FORWARDING].backhaul_efficiency == pytest.approx(bkeff_forwarding_symmetric(n, p), rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("p", [0.0, 0.05, 0.1, 0.15, 0.2])
def test_uplink_nc_honours_lower_bound(p, gf1024):
    rng = np.random.default_rng([29, int(p * 100)])
    totals = fixed_uplink(np.full((4, 4), p), 2000, gf1024, rng, schemes=[Scheme.NETWORK_CODING])
    coded = totals[Scheme.NETWORK_CODING].backhaul
    bound = bkeff_nc_lb(4, 1024, p, 4)
    assert bound.defined
    assert coded.ratio >= bound.value - 2 * coded.standard_error
    assert coded.ratio >= 0.95


# Accumulators


def test_ratio_estimate():
    estimate = RatioEstimate()
    for x, y in [(2, 1), (4, 2), (6, 3)]:
        estimate.add(x, y)
    assert estimate.ratio == 0.5
    assert estimate.standard_error == pytest.approx(0.0)


def test_totals_skip_outage():
    totals = SchemeTotals()
    totals.add(RunMetrics(outage=True))
    totals.add(RunMetrics(air_transmissions=5, slots_to_complete=5, packets_delivered=4))
    assert totals.spans == 2
    assert totals.outage_spans == 1
    assert totals.counted_spans == 1
    assert totals.efficiency == 0.8
    assert totals.mean_delay == 5.0
