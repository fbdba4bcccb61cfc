"""PH universal hash and the harvest pipeline over uninitialized RAM.

PH over 16 message words ``m`` and 16 key words ``k`` of ``w`` bits is

    sum_{i=1..8} (m[2i-1] + k[2i-1]) * (m[2i] + k[2i])

evaluated in exact integer arithmetic, so each output fits in ``2w + 5``
bits (37 for w=16, 133 for w=64).  A chunk of ``32 w`` memory bits feeds
one call: the first 16 words are the message, the next 16 the key.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    bits_to_hex,
    bits_to_int,
    check_bit_matrix,
    check_bits,
    check_count,
    check_fraction,
    exact,
    int_to_bits,
)
from .errors import ArityError, ConstraintError, InsufficientInputError, PowerError, RangeError
from .sram_model import TagState

__all__ = [
    "SUPPORTED_WORD_BITS",
    "DEFAULT_DENSITY",
    "PhConfig",
    "HashOutput",
    "HarvestReport",
    "PHExtractor",
    "ph_hash",
    "extract_all",
    "harvest",
    "entropy_capacity",
    "ideal_extract",
]

SUPPORTED_WORD_BITS = (16, 64)
PAIRS = 8
WORDS_PER_SIDE = 2 * PAIRS
DEFAULT_DENSITY = 0.103


@dataclass(frozen=True)
class PhConfig:
    word_bits: int = 16
    pairs: int = PAIRS

    def __post_init__(self):
        if self.word_bits not in SUPPORTED_WORD_BITS:
            raise ConstraintError(f"word_bits must be one of {SUPPORTED_WORD_BITS}, got {self.word_bits}")
        if self.pairs != PAIRS:
            raise ConstraintError(f"pairs is fixed at {PAIRS}")

    @property
    def chunk_bits(self) -> int:
        return 4 * self.pairs * self.word_bits

    @property
    def output_bits(self) -> int:
        return output_width(self.word_bits)


def output_width(word_bits: int) -> int:
    return 2 * word_bits + 5


@dataclass(frozen=True)
class HashOutput:
    value: int
    width_bits: int

    def bits(self) -> np.ndarray:
        return int_to_bits(self.value, self.width_bits)


@dataclass
class HarvestReport:
    bits: np.ndarray
    source_bytes: int
    chunks: int
    entropy_capacity_bits: int
    discarded_bits: int = 0

    @property
    def extractor_yield_bits(self) -> int:
        return int(self.bits.size)

    def hex(self) -> str:
        return bits_to_hex(self.bits)


def _word_bits(cfg) -> int:
    # A bare int selects a reduced width (1..64) for analysis; PhConfig
    # restricts to the deployed widths.
    if isinstance(cfg, PhConfig):
        return cfg.word_bits
    w = check_count(cfg, "word_bits", minimum=1)
    if w > 64:
        raise ConstraintError("word_bits above 64 is not supported")
    return w


def ph_hash(m, k, cfg: Union[PhConfig, int] = PhConfig()) -> HashOutput:
    """Exact PH of 16 message words ``m`` under 16 key words ``k``."""
    w = _word_bits(cfg)
    m = list(m)
    k = list(k)
    if len(m) != WORDS_PER_SIDE or len(k) != WORDS_PER_SIDE:
        raise ArityError(f"expected {WORDS_PER_SIDE} message and key words, got {len(m)} and {len(k)}")
    limit = 1 << w
    for word in (*m, *k):
        if not 0 <= word < limit:
            raise RangeError(f"word {word} outside [0, 2^{w})")
    total = 0
    for i in range(0, WORDS_PER_SIDE, 2):
        total += (int(m[i]) + int(k[i])) * (int(m[i + 1]) + int(k[i + 1]))
    return HashOutput(total, output_width(w))


def _words(chunk_bits: np.ndarray, w: int) -> list:
    return [bits_to_int(chunk_bits[j * w:(j + 1) * w]) for j in range(chunk_bits.size // w)]


def _ph_chunks_vectorized(chunks: np.ndarray, w: int) -> np.ndarray:
    # int64 is exact while 2w + 5 <= 63
    weights = (1 << np.arange(w - 1, -1, -1, dtype=np.int64))
    words = chunks.reshape(chunks.shape[0], 4 * PAIRS, w).astype(np.int64) @ weights
    s = words[:, :WORDS_PER_SIDE] + words[:, WORDS_PER_SIDE:]
    return (s[:, 0::2] * s[:, 1::2]).sum(axis=1)


def _extract(memory: np.ndarray, w: int):
    chunk_bits = 4 * PAIRS * w
    n_chunks = memory.size // chunk_bits
    if n_chunks == 0:
        raise InsufficientInputError(f"{memory.size} bits is less than one {chunk_bits}-bit chunk")
    width = output_width(w)
    used = memory[: n_chunks * chunk_bits]
    if 2 * w + 5 <= 63:
        values = [int(v) for v in _ph_chunks_vectorized(used.reshape(n_chunks, chunk_bits), w)]
    else:
        values = []
        for c in range(n_chunks):
            words = _words(used[c * chunk_bits:(c + 1) * chunk_bits], w)
            values.append(ph_hash(words[:WORDS_PER_SIDE], words[WORDS_PER_SIDE:], w).value)
    out = np.concatenate([int_to_bits(v, width) for v in values])
    return out, n_chunks, memory.size - n_chunks * chunk_bits


def entropy_capacity(free_bytes: int, density: float = DEFAULT_DENSITY) -> int:
    """``floor(free_bytes * 8 * density)``, computed exactly."""
    free_bytes = check_count(free_bytes, "free_bytes")
    density = check_fraction(density, "density")
    return math.floor(free_bytes * 8 * exact(density))


def extract_all(memory, cfg: PhConfig = PhConfig(), density: float = DEFAULT_DENSITY) -> HarvestReport:
    """Hash ``memory`` chunk by chunk and concatenate the outputs MSB first.

    Trailing bits short of a chunk are dropped and counted in
    ``discarded_bits``.
    """
    memory = check_bits(memory, "memory")
    if memory.size == 0:
        raise InsufficientInputError("memory is empty")
    bits, chunks, discarded = _extract(memory, cfg.word_bits)
    return HarvestReport(
        bits=bits,
        source_bytes=memory.size // 8,
        chunks=chunks,
        entropy_capacity_bits=entropy_capacity(memory.size // 8, density),
        discarded_bits=discarded,
    )


def free_region(tag: TagState) -> np.ndarray:
    if not tag.powered:
        raise PowerError("cannot harvest from an unpowered tag")
    start = tag.spec.reserved_bytes * 8
    return tag.read_bits(start, tag.spec.total_bits - start)


def harvest(tag: TagState, cfg: PhConfig = PhConfig(), density: float = DEFAULT_DENSITY) -> HarvestReport:
    """Extract random bits from the tag's free RAM.

    Memory is read, never marked as consumed: harvesting twice without a
    power cycle gives the same bits.
    """
    region = free_region(tag)
    report = extract_all(region, cfg, density)
    report.source_bytes = tag.spec.free_bytes
    report.entropy_capacity_bits = entropy_capacity(tag.spec.free_bytes, density)
    return report


def ideal_extract(memory, n_bits: int) -> np.ndarray:
    """Idealized extractor: SHAKE-256 of the raw bits, truncated to ``n_bits``.

    Used to model a supply that reaches the full entropy capacity of a
    harvest, which PH at 37 bits per chunk does not.  Callers must keep
    ``n_bits`` at or below the input's entropy.
    """
    memory = check_bits(memory, "memory")
    n_bits = check_count(n_bits, "n_bits")
    digest = hashlib.shake_256(np.packbits(memory).tobytes() + memory.size.to_bytes(8, "big"))
    raw = digest.digest(-(-n_bits // 8))
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:n_bits]


class PHExtractor(TransformerMixin, BaseEstimator):
    """PH extraction as a stateless scikit-learn transformer.

    Each row of ``X`` is a memory dump (bits); ``transform`` returns the
    concatenated hash outputs per row.  ``low_bits_only`` keeps only the
    low ``2w`` bits of each output, which are close to unbiased; the top
    five bits are skewed towards zero.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.zeros((3, 2048), dtype=np.uint8)
    >>> PHExtractor(word_bits=16).fit_transform(X).shape
    (3, 148)
    """

    def __init__(self, word_bits=16, low_bits_only=False):
        self.word_bits = word_bits
        self.low_bits_only = low_bits_only

    def fit(self, X, y=None):
        X = check_bit_matrix(X)
        cfg = PhConfig(self.word_bits)
        if X.shape[1] < cfg.chunk_bits:
            raise InsufficientInputError(f"rows need at least {cfg.chunk_bits} bits")
        self.n_features_in_ = X.shape[1]
        self.n_chunks_ = X.shape[1] // cfg.chunk_bits
        return self

    def transform(self, X):
        check_is_fitted(self, "n_chunks_")
        X = check_bit_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise RangeError(f"expected {self.n_features_in_} bits per row, got {X.shape[1]}")
        w = self.word_bits
        width = output_width(w)
        rows = [_extract(row, w)[0] for row in X]
        out = np.vstack(rows)
        if self.low_bits_only:
            keep = np.tile(np.arange(width) >= 5, self.n_chunks_)
            out = out[:, keep]
        return out
