"""Closed-form efficiencies, backhaul bounds and singularity oracles.

Downlink quantities take a ``DownlinkScenario``; uplink forwarding takes an
``UplinkScenario``. The network-coding backhaul bound is built from the expected
number of linear dependencies of a random z x z matrix, its log-q singularity
bound and the expected-transmissions series, which is summed in extended
precision with ``mpmath``.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import mpmath
import numpy as np

from mmwave_nc.cache import bound_cache
from mmwave_nc.errors import ErrorMessages, InfeasibleBoundError
from mmwave_nc.gf import FieldContext, get_field
from mmwave_nc.logging_config import get_logger
from mmwave_nc.models import DownlinkScenario, SeriesControl, UplinkScenario
from mmwave_nc.rlnc import matrix_rank, matrix_ranks
from mmwave_nc.types import UNDEFINED

logger = get_logger(__name__)

ENUMERATION_LIMIT = 2**20
"""Largest number of matrices the exhaustive oracles will enumerate"""
PHI_BATCH = 4096
"""Matrices drawn and row-reduced together by the singularity oracle"""


def _check_erasures(erasures, what: str = "link") -> np.ndarray:
    p = np.asarray(erasures, dtype=float)
    if np.any(p >= 1.0):
        raise ValueError(f"Every {what} needs an erasure probability below 1, got {p.tolist()}")
    return p


# Downlink


def eff_forwarding(scenario: DownlinkScenario) -> float:
    """k / (ceil(k/N) * sum 1/(1-p_i))."""
    p = _check_erasures(scenario.erasures)
    rounds = math.ceil(scenario.k / scenario.n_relays)
    return scenario.k / (rounds * float(np.sum(1.0 / (1.0 - p))))


def eff_forwarding_ub(scenario: DownlinkScenario) -> float:
    """N / sum 1/(1-p_i), the harmonic mean of the success probabilities."""
    p = _check_erasures(scenario.erasures)
    return scenario.n_relays / float(np.sum(1.0 / (1.0 - p)))


def eff_nc_lb(scenario: DownlinkScenario) -> float:
    """Arithmetic mean of the success probabilities."""
    return float(np.mean(1.0 - np.asarray(scenario.erasures, dtype=float)))


def eff_nc_expected(scenario: DownlinkScenario, transmissions: int) -> float:
    """ceil(L/N) * sum(1-p_i) / L for L coded transmissions."""
    if transmissions < 1:
        raise ValueError(f"Transmission count must be >= 1, got {transmissions}")
    received_per_round = float(np.sum(1.0 - np.asarray(scenario.erasures, dtype=float)))
    return math.ceil(transmissions / scenario.n_relays) * received_per_round / transmissions


def eff_nc_solve_l(scenario: DownlinkScenario) -> int:
    """Smallest whole number of relay rounds, in transmissions, expected to deliver k packets."""
    received_per_round = float(np.sum(1.0 - np.asarray(scenario.erasures, dtype=float)))
    if received_per_round <= 0.0:
        raise ValueError("No relay can deliver a packet")
    # Tolerance absorbs float error when k is an exact multiple of the round yield
    rounds = max(1, math.ceil(scenario.k / received_per_round - 1e-12))
    return rounds * scenario.n_relays


# Uplink forwarding


def expected_device_attempts(erasure_row) -> float:
    """1 / (1 - prod_j p_ij): broadcasts until at least one relay receives."""
    p = np.asarray(erasure_row, dtype=float)
    all_lost = float(np.prod(p))
    if all_lost >= 1.0:
        raise ValueError("Device has no usable uplink")
    return 1.0 / (1.0 - all_lost)


def _expected_copies(scenario: UplinkScenario) -> np.ndarray:
    """Expected number of relays holding each device's packet."""
    copies = []
    for row in scenario.erasures:
        attempts = expected_device_attempts(row)
        p = np.asarray(row, dtype=float)
        copies.append(float(np.sum(1.0 - p**attempts)))
    return np.array(copies)


def bkeff_forwarding(scenario: UplinkScenario) -> float:
    """z / sum_i max(1, sum_j (1 - p_ij^E[P_i])): each packet costs at least one backhaul copy."""
    return scenario.z / float(np.sum(np.maximum(1.0, _expected_copies(scenario))))


def bkeff_forwarding_unclamped(scenario: UplinkScenario) -> float:
    """Same without the clamp; exceeds 1 for high erasure and few relays."""
    return scenario.z / float(np.sum(_expected_copies(scenario)))


def bkeff_forwarding_symmetric(n_relays: int, p: float) -> float:
    """min[1, 1 / (N (1 - p^(1/(1-p^N))))]."""
    if p >= 1.0:
        raise ValueError("Erasure probability must be below 1")
    copies = n_relays * (1.0 - p ** (1.0 / (1.0 - p**n_relays)))
    return min(1.0, 1.0 / copies)


# Singularity machinery


def zeta(z: int, l: int) -> int:
    """C(z+l, z), with zeta(-1) = 0."""
    if l < -1:
        raise ValueError(f"zeta is defined for l >= -1, got {l}")
    if l == -1:
        return 0
    return math.comb(z + l, z)


def _as_fraction(p) -> Fraction:
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise ValueError(f"Probability out of range: {p}")
    return p


def _lbar_exact(z: int, q: int, p: Fraction) -> Fraction:
    ratio = 1 - Fraction(q) * (1 - p) / (q - 1)
    total = Fraction(0)
    for k in range(1, z + 1):
        total += (
            math.comb(z, k) * Fraction(1, q ** (z - k)) * (1 - Fraction(1, q)) ** k * (1 + (q - 1) * ratio**k) ** z
        )
    return total


def lbar_exact(z: int, q: int, p) -> Fraction:
    """Expected count of linear dependencies of a z x z matrix with Omega(p) entries, in exact rationals."""
    if z < 1 or q < 2:
        raise ValueError(f"Need z >= 1 and q >= 2, got z={z}, q={q}")
    p = _as_fraction(p)
    return bound_cache.get_or_compute("lbar", (z, q, p), lambda: _lbar_exact(z, q, p))


def lbar(z: int, q: int, p: float) -> float:
    return float(lbar_exact(z, q, p))


def phi_ub(z: int, q: int, p: float) -> float:
    """log_q(lbar + 1), an upper bound on the singularity probability; feasible iff below 1."""
    value = lbar_exact(z, q, p)
    with mpmath.workdps(30):
        return float(mpmath.log1p(mpmath.mpf(value.numerator) / value.denominator) / mpmath.log(q))


def is_feasible(z: int, q: int, p: float) -> bool:
    return phi_ub(z, q, p) < 1.0


def feasible_p_range(z: int, q: int, tolerance: float = 1e-9) -> Optional[float]:
    """Largest p with phi_ub < 1, by bisection above p = 1/q.

    The dependency count grows with p once zeros are at least as likely as any
    other symbol, so the feasible region above 1/q is an interval.
    """
    lo, hi = 1.0 / q, 1.0
    if not is_feasible(z, q, lo):
        return None
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if is_feasible(z, q, mid):
            lo = mid
        else:
            hi = mid
    return lo


# Expected backhaul transmissions


@dataclass
class SeriesResult:
    value: float
    terms: int
    tail_bound: float
    """Upper bound on what the truncated terms could add"""


def _series(z: int, phi: float, control: SeriesControl, closed: bool) -> SeriesResult:
    if not 0.0 <= phi < 1.0:
        raise InfeasibleBoundError(f"{ErrorMessages.INFEASIBLE} (phi={phi})")
    if phi == 0.0:
        return SeriesResult(float(z), 1, 0.0)

    with mpmath.workdps(control.precision_digits):
        phi_mp = mpmath.mpf(phi)
        log_phi = mpmath.log(phi_mp)
        total = mpmath.mpf(z) if closed else mpmath.mpf(0)
        previous = mpmath.mpf(1)
        l = 0
        while True:
            power = mpmath.exp(zeta(z, l) * log_phi)
            term = power if closed else (z + l) * (previous - power)
            total += term
            l += 1
            if term < control.tolerance * total or l >= control.max_terms:
                break
            previous = power
        if l >= control.max_terms:
            logger.warning(f"Series for z={z}, phi={phi} stopped at {l} terms")
        # Remaining exponents grow by at least one per term
        if closed:
            tail = power / (1 - phi_mp)
        else:
            tail = power * ((z + l) / (1 - phi_mp) + phi_mp / (1 - phi_mp) ** 2)
        return SeriesResult(float(total), l, float(tail))


def beta_nc_series(z: int, phi: float, control: Optional[SeriesControl] = None) -> SeriesResult:
    """sum_{l>=0} (z+l) [1 - phi^(zeta(l)-zeta(l-1))] phi^zeta(l-1), truncated."""
    control = control or SeriesControl()
    return _series(z, phi, control, closed=False)


def beta_nc(z: int, phi: float, control: Optional[SeriesControl] = None) -> float:
    """Upper bound on the expected backhaul transmissions for z sources."""
    control = control or SeriesControl()
    key = (z, phi, control.tolerance, control.max_terms, control.precision_digits)
    return bound_cache.get_or_compute("beta_nc", key, lambda: beta_nc_series(z, phi, control).value)


def beta_nc_closed(z: int, phi: float, control: Optional[SeriesControl] = None) -> float:
    """z + sum_{l>=0} phi^zeta(l), the same series after summation by parts."""
    control = control or SeriesControl()
    return _series(z, phi, control, closed=True).value


@dataclass
class BackhaulBound:
    """Lower bound on the network-coding backhaul efficiency, or undefined."""

    z: int
    q: int
    p: float
    n_relays: int
    phi_ub: float
    beta: Optional[float] = None
    value: Optional[float] = None

    @property
    def defined(self) -> bool:
        return self.value is not None

    def as_field(self) -> float | str:
        return self.value if self.value is not None else UNDEFINED


def bkeff_nc_lb(
    z: int, q: int, p: float, n_relays: int, control: Optional[SeriesControl] = None
) -> BackhaulBound:
    """z / beta_nc(phi_ub), or z / max(N, beta_nc(phi_ub)) when N > z. Undefined where phi_ub >= 1."""
    phi = phi_ub(z, q, p)
    bound = BackhaulBound(z=z, q=q, p=p, n_relays=n_relays, phi_ub=phi)
    if phi >= 1.0:
        logger.debug(f"Backhaul bound undefined for z={z}, q={q}, p={p}: phi_ub={phi:.4f}")
        return bound
    bound.beta = beta_nc(z, phi, control)
    bound.value = z / (max(n_relays, bound.beta) if n_relays > z else bound.beta)
    return bound


def bkeff_nc_lb_scenario(scenario: UplinkScenario, control: Optional[SeriesControl] = None) -> BackhaulBound:
    """Scenario form; only symmetric erasure is supported."""
    return bkeff_nc_lb(scenario.z, scenario.q, scenario.symmetric_p(), scenario.n_relays, control)


# Singularity oracles


@dataclass
class PhiEstimate:
    phi: float
    phi_se: float
    mean_defect: float
    defect_se: float
    trials: int


def phi_oracle(z: int, q: int, p: float, trials: int, rng: np.random.Generator) -> PhiEstimate:
    """Fraction of singular z x z matrices with i.i.d. Omega(p) entries, plus the mean defect."""
    if trials < 1:
        raise ValueError(f"Trials must be >= 1, got {trials}")
    field = get_field(q)
    defects = np.empty(trials, dtype=np.int64)
    for start in range(0, trials, PHI_BATCH):
        size = min(PHI_BATCH, trials - start)
        defects[start : start + size] = z - matrix_ranks(field.random_omega((size, z, z), p, rng))
    singular = (defects > 0).astype(float)
    se = math.sqrt(singular.var(ddof=1) / trials) if trials > 1 else math.nan
    defect_se = math.sqrt(defects.var(ddof=1) / trials) if trials > 1 else math.nan
    return PhiEstimate(float(singular.mean()), se, float(defects.mean()), defect_se, trials)


def _enumerate(z: int, field: FieldContext, p: float):
    """Every z x z matrix with its Omega(p) probability."""
    q = field.q
    cells = z * z
    if q**cells > ENUMERATION_LIMIT:
        raise ValueError(f"Enumeration of GF({q}) {z}x{z} matrices exceeds {ENUMERATION_LIMIT}")
    nonzero = (1.0 - p) / (q - 1)
    for values in itertools.product(range(q), repeat=cells):
        zeros = values.count(0)
        weight = p**zeros * nonzero ** (cells - zeros)
        if weight == 0.0:
            continue
        yield field.array(np.array(values).reshape(z, z)), weight


def phi_exact(z: int, q: int, p: float) -> float:
    """Singularity probability by exhaustive enumeration, small (z, q) only."""
    field = get_field(q)
    return sum(weight for matrix, weight in _enumerate(z, field, p) if matrix_rank(matrix) < z)


def lbar_enumerated(z: int, q: int, p: float) -> float:
    """Expected dependency count by enumeration; a defect d gives q^d - 1 dependencies."""
    field = get_field(q)
    return sum(weight * (q ** (z - matrix_rank(matrix)) - 1) for matrix, weight in _enumerate(z, field, p))
