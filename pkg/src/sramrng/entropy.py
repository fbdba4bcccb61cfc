"""Entropy estimation, sanity tests on extractor output, and harvest budgets."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bit_matrix, check_bits, check_count, check_positive, derive_seed
from .errors import InfeasibleError, RangeError
from .extractor import entropy_capacity
from .sram_model import DecayParams, TagSpec, create_tag

__all__ = [
    "BiasProfile",
    "BudgetRow",
    "MonobitResult",
    "MinEntropyEstimator",
    "cold_boot_samples",
    "estimate_biases",
    "min_entropy_density",
    "monobit_test",
    "serial_correlation",
    "budget",
]

_TRIAL_STREAM = 0x7B1A5


@dataclass
class BiasProfile:
    per_bit_one_freq: np.ndarray
    trials: int

    def __post_init__(self):
        self.per_bit_one_freq = np.asarray(self.per_bit_one_freq, dtype=float)
        if self.trials < 1:
            raise RangeError("trials must be >= 1")
        f = self.per_bit_one_freq
        if f.size and ((f < 0) | (f > 1)).any():
            raise RangeError("frequencies must lie in [0, 1]")


@dataclass(frozen=True)
class BudgetRow:
    free_bytes: int
    capacity_bits: int
    protocol_bits: int
    harvests: int
    cooldown_s: float
    wait_s_between: float
    wait_s_per: float


@dataclass(frozen=True)
class MonobitResult:
    statistic: float
    p_value: float
    passed: bool


def cold_boot_samples(spec: TagSpec, decay: DecayParams, seed: int, trials: int) -> np.ndarray:
    """Memory images from ``trials`` independent first power-ups of one tag.

    The cell population comes from ``seed``; each trial gets its own
    derived power-up stream, so row ``i`` does not depend on how many
    other trials run.
    """
    trials = check_count(trials, "trials", minimum=1)
    template = create_tag(spec, decay, seed)
    out = np.empty((trials, template.n_cells), dtype=np.uint8)
    for i in range(trials):
        tag = template.copy()
        tag.rng = np.random.default_rng(derive_seed(seed, _TRIAL_STREAM, i))
        tag.power_on(0.0)
        out[i] = tag.memory
    return out


def estimate_biases(spec: TagSpec, decay: DecayParams, seed: int, trials: int) -> BiasProfile:
    if int(trials) < 1:
        raise RangeError("trials must be >= 1")
    boots = cold_boot_samples(spec, decay, seed, trials)
    return BiasProfile(boots.mean(axis=0), int(trials))


def min_entropy_density(profile: BiasProfile) -> float:
    """Mean per-bit min-entropy, ``-log2(max(p, 1 - p))``.

    Bits never seen to flip contribute exactly zero.
    """
    p = np.asarray(profile.per_bit_one_freq, dtype=float)
    if p.size == 0:
        raise RangeError("empty bias profile")
    return float(np.mean(-np.log2(np.maximum(p, 1.0 - p))))


def monobit_test(bits, alpha: float = 0.01) -> MonobitResult:
    """Frequency (monobit) test with a two-sided normal p-value."""
    bits = check_bits(bits, min_length=100)
    n = bits.size
    ones = int(bits.sum())
    z = abs(ones - n / 2) / (math.sqrt(n) / 2)
    p_value = math.erfc(z / math.sqrt(2))
    return MonobitResult(z, p_value, p_value >= alpha)


def serial_correlation(bits) -> float:
    """Circular lag-1 Pearson correlation of a bit sequence.

    The last bit is paired with the first, so every position appears once in
    each role and a periodic pattern whose period divides the length gives
    its exact correlation (``0011`` repeated gives 0).
    """
    x = check_bits(bits, min_length=100).astype(float)
    x = x - x.mean()
    var = float(np.dot(x, x))
    if var == 0:
        raise RangeError("serial correlation undefined for a constant sequence")
    return float(np.dot(x, np.roll(x, -1)) / var)


def budget(free_bytes: int, density: float, protocol_bits: int, cooldown_s: float) -> BudgetRow:
    """Harvests and wait time needed to supply ``protocol_bits``.

    Both wait conventions are reported: waits only between harvests, and a
    wait before every harvest.
    """
    check_positive(protocol_bits, "protocol_bits")
    check_positive(cooldown_s, "cooldown_s")
    capacity = entropy_capacity(free_bytes, density)
    if capacity == 0:
        raise InfeasibleError(f"{free_bytes} free bytes at density {density} yield no entropy per harvest")
    return budget_from_capacity(free_bytes, capacity, protocol_bits, cooldown_s)


def budget_from_capacity(free_bytes, capacity_bits, protocol_bits, cooldown_s) -> BudgetRow:
    if capacity_bits <= 0:
        raise InfeasibleError("zero supply per harvest")
    harvests = -(-int(protocol_bits) // int(capacity_bits))
    return BudgetRow(
        free_bytes=int(free_bytes),
        capacity_bits=int(capacity_bits),
        protocol_bits=int(protocol_bits),
        harvests=harvests,
        cooldown_s=cooldown_s,
        wait_s_between=(harvests - 1) * cooldown_s,
        wait_s_per=harvests * cooldown_s,
    )


class MinEntropyEstimator(BaseEstimator):
    """Per-bit bias and min-entropy density from repeated cold-boot images.

    ``fit`` takes a ``(trials, n_bits)`` 0/1 matrix, one memory image per
    row.  After fitting, ``one_freq_`` holds the per-bit frequency of ones
    and ``density_`` the min-entropy per bit.
    """

    def __init__(self, noisy_low=0.1, noisy_high=0.9):
        self.noisy_low = noisy_low
        self.noisy_high = noisy_high

    def fit(self, X, y=None):
        X = check_bit_matrix(X)
        self.n_features_in_ = X.shape[1]
        self.profile_ = BiasProfile(X.mean(axis=0), X.shape[0])
        self.one_freq_ = self.profile_.per_bit_one_freq
        self.density_ = min_entropy_density(self.profile_)
        return self

    @property
    def noisy_fraction_(self) -> float:
        check_is_fitted(self, "one_freq_")
        f = self.one_freq_
        return float(np.mean((f > self.noisy_low) & (f < self.noisy_high)))
