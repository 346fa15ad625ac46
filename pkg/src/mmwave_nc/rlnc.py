"""Random linear network coding: encoders, incremental decoder and rank helpers."""

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import galois
import numpy as np

from mmwave_nc.errors import DimensionMismatchError, NotDecodableError, NothingToSendError
from mmwave_nc.gf import FieldContext
from mmwave_nc.logging_config import get_logger

logger = get_logger(__name__)


@dataclass
class Generation:
    """k original packets of equal length, one field symbol per entry."""

    field: FieldContext
    packets: galois.FieldArray
    """Shape (k, length)"""

    def __post_init__(self):
        if self.packets.ndim != 2 or self.packets.shape[0] < 1:
            raise DimensionMismatchError(f"Generation needs a (k, length) array with k >= 1, got {self.packets.shape}")

    @property
    def k(self) -> int:
        return self.packets.shape[0]

    @property
    def length(self) -> int:
        return self.packets.shape[1]

    @classmethod
    def random(cls, field: FieldContext, k: int, length: int, rng: np.random.Generator) -> "Generation":
        return cls(field, field.random_uniform((k, length), rng))

    @classmethod
    def from_bytes(cls, field: FieldContext, payloads: Sequence[bytes]) -> "Generation":
        """One symbol per byte, shorter payloads padded with zeros."""
        if field.q < 256:
            raise DimensionMismatchError(f"GF({field.q}) cannot hold byte symbols")
        if not payloads:
            raise DimensionMismatchError("Generation needs at least one payload")
        length = max(len(p) for p in payloads)
        symbols = np.zeros((len(payloads), length), dtype=np.int64)
        for i, payload in enumerate(payloads):
            symbols[i, : len(payload)] = np.frombuffer(payload, dtype=np.uint8)
        return cls(field, field.array(symbols))


@dataclass
class CodedPacket:
    """Encoding vector plus the matching linear combination of payloads."""

    coeffs: galois.FieldArray
    payload: galois.FieldArray

    @property
    def dimension(self) -> int:
        return self.coeffs.shape[0]


def _combine(field: FieldContext, coeffs: galois.FieldArray, packets: Optional[galois.FieldArray]) -> galois.FieldArray:
    if packets is None or packets.shape[1] == 0:
        return field.zeros(0)
    return coeffs @ packets


def encode_intra(gen: Generation, rng: np.random.Generator) -> CodedPacket:
    """Coded packet over the whole generation, coefficients uniform over GF(q).

    An all-zero encoding vector carries nothing, so it is redrawn.
    """
    field = gen.field
    while True:
        coeffs = field.random_uniform(gen.k, rng)
        if np.any(coeffs != 0):
            break
    return CodedPacket(coeffs, _combine(field, coeffs, gen.packets))


def encode_inter(
    field: FieldContext,
    received_mask: Sequence[bool],
    payloads: Optional[galois.FieldArray],
    rng: np.random.Generator,
) -> CodedPacket:
    """Coded packet over the sources a relay holds.

    ``payloads`` holds one row per true entry of ``received_mask``, in order, or
    None when only encoding vectors matter. Coefficients are zero for missing
    sources and uniform nonzero otherwise.
    """
    mask = np.asarray(received_mask, dtype=bool)
    held = int(mask.sum())
    if held == 0:
        raise NothingToSendError("Relay holds no packet of this session")
    if payloads is not None and payloads.shape[0] != held:
        raise DimensionMismatchError(f"Expected {held} payload rows, got {payloads.shape[0]}")

    coeffs = field.zeros(mask.shape[0])
    chosen = field.random_nonzero(held, rng)
    coeffs[mask] = chosen
    return CodedPacket(coeffs, _combine(field, chosen, payloads))


class DecoderState:
    """Transfer matrix kept in reduced row-echelon form, payloads augmented on the right."""

    def __init__(self, field: FieldContext, dimension: int, payload_length: int = 0):
        if dimension < 1:
            raise DimensionMismatchError(f"Decoder dimension must be >= 1, got {dimension}")
        self.field = field
        self.dimension = dimension
        self.payload_length = payload_length
        self._rows = field.zeros((0, dimension + payload_length))

    @property
    def rank(self) -> int:
        return self._rows.shape[0]

    @property
    def is_complete(self) -> bool:
        return self.rank == self.dimension

    @property
    def coefficient_rows(self) -> galois.FieldArray:
        return self._rows[:, : self.dimension]

    def add(self, pkt: CodedPacket) -> bool:
        """Row-reduce the packet into the state; True iff the rank grew."""
        if pkt.dimension != self.dimension:
            raise DimensionMismatchError(f"Packet has {pkt.dimension} coefficients, decoder expects {self.dimension}")
        if pkt.payload.shape[0] != self.payload_length:
            raise DimensionMismatchError(
                f"Packet payload has {pkt.payload.shape[0]} symbols, decoder expects {self.payload_length}"
            )
        if self.is_complete:
            return False

        row = np.concatenate((pkt.coeffs, pkt.payload)).reshape(1, -1)
        reduced = np.concatenate((self._rows, row), axis=0).row_reduce(ncols=self.dimension)
        pivots = np.any(reduced[:, : self.dimension] != 0, axis=1)
        if int(pivots.sum()) <= self.rank:
            return False
        self._rows = reduced[pivots]
        return True

    def can_increase_rank(self, received_mask: Sequence[bool]) -> bool:
        """Whether some packet coded over the masked sources would be innovative."""
        mask = np.asarray(received_mask, dtype=bool)
        if mask.shape[0] != self.dimension:
            raise DimensionMismatchError(f"Mask has {mask.shape[0]} entries, decoder expects {self.dimension}")
        if self.is_complete or not mask.any():
            return False
        units = self.field.zeros((int(mask.sum()), self.dimension))
        units[np.arange(units.shape[0]), np.flatnonzero(mask)] = 1
        return matrix_rank(np.concatenate((self.coefficient_rows, units), axis=0)) > self.rank

    def extract(self) -> list[galois.FieldArray]:
        """The original payloads, in source order."""
        if not self.is_complete:
            raise NotDecodableError(self.rank, self.dimension)
        # Full rank RREF has the identity on the left, so the right block is M^-1 r
        return [self._rows[i, self.dimension :] for i in range(self.dimension)]


def decoder_add(state: DecoderState, pkt: CodedPacket) -> bool:
    return state.add(pkt)


def decoder_extract(state: DecoderState) -> list[galois.FieldArray]:
    return state.extract()


def matrix_rank(rows: galois.FieldArray) -> int:
    """Rank over the field of the rows' galois array."""
    if rows.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-D array, got shape {rows.shape}")
    if rows.shape[0] == 0 or rows.shape[1] == 0:
        return 0
    return int(np.linalg.matrix_rank(rows))


def matrix_ranks(stack: galois.FieldArray) -> np.ndarray:
    """Ranks of a stack of matrices, shape (batch, rows, cols), by batched elimination."""
    if stack.ndim != 3:
        raise DimensionMismatchError(f"Expected a 3-D array, got shape {stack.shape}")
    a = stack.copy()
    batch, n_rows, n_cols = a.shape
    pivot_row = np.zeros(batch, dtype=np.int64)
    row_index = np.arange(n_rows)
    for col in range(n_cols):
        candidates = (a[:, :, col] != 0) & (row_index[None, :] >= pivot_row[:, None])
        active = np.flatnonzero(candidates.any(axis=1))
        if active.size == 0:
            continue
        target = pivot_row[active]
        source = np.argmax(candidates[active], axis=1)
        swapped = a[active, source].copy()
        a[active, source] = a[active, target]
        a[active, target] = swapped / swapped[:, col : col + 1]
        # clear the column everywhere except on the pivot row
        factors = a[active, :, col].copy()
        factors[np.arange(active.size), target] = 0
        a[active] = a[active] - factors[:, :, None] * a[active, target][:, None, :]
        pivot_row[active] += 1
    return pivot_row


def defect(rows: galois.FieldArray) -> int:
    """Number of rows minus rank."""
    return rows.shape[0] - matrix_rank(rows)


def count_linear_dependencies(rows: galois.FieldArray, field: FieldContext) -> int:
    """Nonzero vectors c with sum_i c_i M_i = 0, by enumeration. Small q^rows only."""
    n = rows.shape[0]
    if n == 0:
        return 0
    vectors = field.array(list(itertools.product(range(field.q), repeat=n)))
    combos = vectors @ rows
    # The all-zero vector is first in product order and is not a dependency
    return int(np.all(combos == 0, axis=1).sum()) - 1
