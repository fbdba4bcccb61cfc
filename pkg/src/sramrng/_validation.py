"""Input validation helpers used across the package."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
from sklearn.utils.validation import check_array

from .errors import ConstraintError, RangeError


def check_bits(bits, name="bits", min_length=0) -> np.ndarray:
    """Return ``bits`` as a 1-D ``uint8`` array of zeros and ones.

    Accepts any sequence of ints/bools or a string of ``'0'``/``'1'``.
    """
    if isinstance(bits, str):
        bits = [int(c) for c in bits if not c.isspace()]
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise RangeError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise RangeError(f"{name} must contain only 0/1 values")
    if arr.size < min_length:
        raise RangeError(f"{name} needs at least {min_length} bits, got {arr.size}")
    return arr.astype(np.uint8, copy=True)


def check_bit_matrix(X, name="X") -> np.ndarray:
    """2-D variant of :func:`check_bits` for estimator inputs (rows are samples)."""
    X = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=1)
    if not np.isin(X, (0, 1)).all():
        raise RangeError(f"{name} must contain only 0/1 values")
    return X.astype(np.uint8)


def check_fraction(value, name, *, open_low=False, open_high=False) -> float:
    value = float(value)
    low_ok = value > 0 if open_low else value >= 0
    high_ok = value < 1 if open_high else value <= 1
    if not (math.isfinite(value) and low_ok and high_ok):
        raise ConstraintError(f"{name} must lie in the unit interval, got {value}")
    return value


def check_positive(value, name, *, allow_zero=False) -> float:
    value = float(value)
    ok = value >= 0 if allow_zero else value > 0
    if not (math.isfinite(value) and ok):
        bound = ">= 0" if allow_zero else "> 0"
        raise ConstraintError(f"{name} must be finite and {bound}, got {value}")
    return value


def check_count(value, name, *, minimum=0) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ConstraintError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ConstraintError(f"{name} must be >= {minimum}, got {value}")
    return value


def exact(value) -> Fraction:
    """Decimal-exact rational for a float such as ``0.103``.

    ``Fraction(0.103)`` would carry the binary rounding error; going through
    ``repr`` keeps the value the user typed.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(repr(float(value)))


def derive_seed(seed, *keys) -> int:
    """Deterministic child seed for a named substream of ``seed``."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def bits_to_int(bits) -> int:
    """Interpret ``bits`` most-significant-bit first."""
    value = 0
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        value = (value << 1) | b
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    if value < 0 or value >> width:
        raise RangeError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def bits_to_hex(bits) -> str:
    """Uppercase, MSB-first hex; a partial leading nibble is zero-padded on the left."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return ""
    digits = -(-bits.size // 4)
    return format(bits_to_int(bits), "X").rjust(digits, "0")
