"""Arithmetic over GF(2^m) for encoding coefficients and payload symbols.

Field arithmetic is delegated to ``galois``; this module pins the reduction
polynomial, validates it, and exposes the scalar and batch helpers used by the
coder, the simulator and the bound oracles.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Optional

import galois
import numpy as np

from mmwave_nc.errors import FieldDomainError
from mmwave_nc.logging_config import get_logger

logger = get_logger(__name__)

# Exponents of the default reduction polynomial per degree.
_DEFAULT_POLYNOMIAL_TERMS: dict[int, tuple[int, ...]] = {
    1: (1, 0),
    2: (2, 1, 0),
    3: (3, 1, 0),
    4: (4, 1, 0),
    5: (5, 2, 0),
    6: (6, 4, 3, 1, 0),
    7: (7, 1, 0),
    8: (8, 4, 3, 2, 0),
    9: (9, 4, 0),
    10: (10, 3, 0),
    11: (11, 2, 0),
    12: (12, 7, 6, 5, 3, 1, 0),
    13: (13, 4, 3, 1, 0),
    14: (14, 7, 5, 3, 0),
    15: (15, 5, 4, 2, 0),
    16: (16, 5, 3, 2, 0),
}

DEFAULT_FIELD_SIZE = 1024


def default_polynomial(degree: int) -> int:
    """Bit pattern of the default irreducible polynomial of the given degree."""
    if degree not in _DEFAULT_POLYNOMIAL_TERMS:
        raise FieldDomainError(f"No default reduction polynomial for degree {degree}")
    return sum(1 << e for e in _DEFAULT_POLYNOMIAL_TERMS[degree])


def polynomial_str(polynomial: int) -> str:
    terms = []
    for e in range(polynomial.bit_length() - 1, -1, -1):
        if polynomial >> e & 1:
            terms.append("1" if e == 0 else "x" if e == 1 else f"x^{e}")
    return " + ".join(terms)


class FieldContext:
    """GF(q), q = 2^m, with a fixed reduction polynomial. Immutable once built."""

    def __init__(self, q: int = DEFAULT_FIELD_SIZE, polynomial: Optional[int] = None):
        if q < 2 or q & (q - 1):
            raise FieldDomainError(f"Field size must be a power of two >= 2, got {q}")
        degree = q.bit_length() - 1
        if polynomial is None:
            polynomial = default_polynomial(degree)
        if polynomial.bit_length() - 1 != degree:
            raise FieldDomainError(f"Polynomial {polynomial:#b} does not have degree {degree}")

        poly = galois.Poly.Int(polynomial, field=galois.GF(2))
        if degree > 1 and not poly.is_irreducible():
            raise FieldDomainError(f"Polynomial {polynomial_str(polynomial)} is reducible over GF(2)")

        self._q = q
        self._degree = degree
        self._polynomial = polynomial
        self._gf = galois.GF(2) if degree == 1 else galois.GF(q, irreducible_poly=poly)
        logger.debug(f"Built GF({q}) with reduction polynomial {polynomial_str(polynomial)}")

    def __reduce__(self):
        # galois classes are rebuilt per process; workers share only (q, polynomial)
        return (get_field, (self._q, self._polynomial))

    def __repr__(self) -> str:
        return f"FieldContext(q={self._q}, polynomial={self._polynomial:#b})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FieldContext) and (self._q, self._polynomial) == (other._q, other._polynomial)

    def __hash__(self) -> int:
        return hash((self._q, self._polynomial))

    @property
    def q(self) -> int:
        return self._q

    @property
    def degree(self) -> int:
        return self._degree

    @property
    def polynomial(self) -> int:
        return self._polynomial

    @property
    def GF(self) -> type[galois.FieldArray]:
        """The galois field array class backing this context."""
        return self._gf

    def describe(self) -> dict[str, Any]:
        return {
            "q": self._q,
            "degree": self._degree,
            "polynomial": self._polynomial,
            "polynomial_str": polynomial_str(self._polynomial),
        }

    # Scalars

    def element(self, value: int) -> "FieldElement":
        value = int(value)
        if not 0 <= value < self._q:
            raise FieldDomainError(f"Value {value} is not an element of GF({self._q})")
        return FieldElement(value, self)

    def sample_uniform_nonzero(self, rng: np.random.Generator) -> "FieldElement":
        return FieldElement(int(rng.integers(1, self._q)), self)

    def sample_omega(self, p: float, rng: np.random.Generator) -> "FieldElement":
        """0 with probability p, otherwise uniform over the nonzero elements."""
        if not 0.0 <= p <= 1.0:
            raise FieldDomainError(f"Probability out of range: {p}")
        if rng.random() < p:
            return FieldElement(0, self)
        return self.sample_uniform_nonzero(rng)

    # Arrays

    def array(self, values) -> galois.FieldArray:
        try:
            return self._gf(values)
        except ValueError as e:
            raise FieldDomainError(str(e)) from e

    def zeros(self, shape) -> galois.FieldArray:
        return self._gf.Zeros(shape)

    def random_uniform(self, shape, rng: np.random.Generator) -> galois.FieldArray:
        return self._gf(rng.integers(0, self._q, size=shape))

    def random_nonzero(self, shape, rng: np.random.Generator) -> galois.FieldArray:
        return self._gf(rng.integers(1, self._q, size=shape))

    def random_omega(self, shape, p: float, rng: np.random.Generator) -> galois.FieldArray:
        """Entries drawn i.i.d. from Omega(p)."""
        if not 0.0 <= p <= 1.0:
            raise FieldDomainError(f"Probability out of range: {p}")
        values = rng.integers(1, self._q, size=shape)
        values[rng.random(size=shape) < p] = 0
        return self._gf(values)


@lru_cache(maxsize=None)
def get_field(q: int = DEFAULT_FIELD_SIZE, polynomial: Optional[int] = None) -> FieldContext:
    """Shared field context per (q, polynomial)."""
    return FieldContext(q, polynomial)


@dataclass(frozen=True, slots=True)
class FieldElement:
    """An element of a FieldContext, value in [0, q)."""

    value: int
    field: FieldContext

    def _check(self, other: "FieldElement") -> None:
        if self.field != other.field:
            raise FieldDomainError(f"Elements of different fields: {self.field} and {other.field}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        gf = self.field.GF
        return FieldElement(int(gf(self.value) + gf(other.value)), self.field)

    __sub__ = __add__

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        self._check(other)
        gf = self.field.GF
        return FieldElement(int(gf(self.value) * gf(other.value)), self.field)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise FieldDomainError("Zero has no multiplicative inverse")
        return FieldElement(int(np.reciprocal(self.field.GF(self.value))), self.field)

    def __int__(self) -> int:
        return self.value

    def __bool__(self) -> bool:
        return self.value != 0


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    return a + b


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    return a * b


def gf_inv(a: FieldElement) -> FieldElement:
    return a.inverse()


def sample_uniform_nonzero(field: FieldContext, rng: np.random.Generator) -> FieldElement:
    return field.sample_uniform_nonzero(rng)


def sample_omega(field: FieldContext, p: float, rng: np.random.Generator) -> FieldElement:
    return field.sample_omega(p, rng)
