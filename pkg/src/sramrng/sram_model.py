"""SRAM cell physics and the tag power lifecycle.

Every cell has a power-up bias (``one_prob``) and a retention time
(``decay_time``).  While the tag is powered, memory behaves like ordinary
RAM.  When power is lost the stored array is left untouched; on the next
power-up each cell whose (temperature-scaled) off time exceeds its retention
time is resampled from its power-up distribution, and every other cell keeps
its value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._validation import check_bits, check_count, check_fraction, check_positive
from .errors import ClockError, ConstraintError, PowerError, RangeError, TagStateError

__all__ = [
    "CellParams",
    "TagSpec",
    "DecayParams",
    "TagState",
    "create_tag",
    "decay_cdf",
    "hamming_fraction",
    "temperature_factor",
    "GENERATIONS",
]


@dataclass(frozen=True)
class CellParams:
    one_prob: float
    decay_time: float

    def __post_init__(self):
        check_fraction(self.one_prob, "one_prob")
        check_positive(self.decay_time, "decay_time")


@dataclass(frozen=True)
class TagSpec:
    """Memory layout and environment of a simulated tag.

    ``bias_model="beta"`` switches from the two-population cell model to a
    graded one where every ``one_prob`` is drawn from
    ``Beta(bias_beta_shape, bias_beta_shape)``; ``noisy_fraction`` is then
    ignored.
    """

    total_bytes: int = 512
    reserved_bytes: int = 136
    excluded_bytes: int = 2
    noisy_fraction: float = 0.103
    temperature_c: float = 20.0
    bias_model: str = "two_population"
    bias_beta_shape: float = 0.05

    def __post_init__(self):
        check_count(self.total_bytes, "total_bytes", minimum=1)
        check_count(self.reserved_bytes, "reserved_bytes")
        check_count(self.excluded_bytes, "excluded_bytes")
        if self.reserved_bytes + self.excluded_bytes > self.total_bytes:
            raise ConstraintError("reserved_bytes + excluded_bytes exceeds total_bytes")
        check_fraction(self.noisy_fraction, "noisy_fraction")
        if not math.isfinite(self.temperature_c):
            raise ConstraintError("temperature_c must be finite")
        if self.bias_model not in ("two_population", "beta"):
            raise ConstraintError(f"unknown bias_model {self.bias_model!r}")
        check_positive(self.bias_beta_shape, "bias_beta_shape")

    @property
    def total_bits(self) -> int:
        return self.total_bytes * 8

    @property
    def free_bytes(self) -> int:
        return self.total_bytes - self.reserved_bytes


@dataclass(frozen=True)
class DecayParams:
    """Logistic remanence model.

    ``midpoint_s=None`` means "draw the midpoint per tag", uniformly from
    ``midpoint_range``.  :meth:`resolve` pins it.
    """

    midpoint_s: Optional[float] = None
    slope_s: float = 1.5
    temp_ref_c: float = 20.0
    temp_doubling_c: float = 10.0
    midpoint_range: tuple = (21.0, 24.0)

    def __post_init__(self):
        if self.midpoint_s is not None:
            check_positive(self.midpoint_s, "midpoint_s")
        check_positive(self.slope_s, "slope_s")
        check_positive(self.temp_doubling_c, "temp_doubling_c")
        if not math.isfinite(self.temp_ref_c):
            raise ConstraintError("temp_ref_c must be finite")
        lo, hi = self.midpoint_range
        check_positive(lo, "midpoint_range low")
        if hi < lo or not math.isfinite(hi):
            raise ConstraintError(f"bad midpoint_range {self.midpoint_range}")
        object.__setattr__(self, "midpoint_range", (float(lo), float(hi)))

    @property
    def nominal_midpoint_s(self) -> float:
        if self.midpoint_s is not None:
            return float(self.midpoint_s)
        lo, hi = self.midpoint_range
        return (lo + hi) / 2

    def resolve(self, rng: np.random.Generator) -> "DecayParams":
        if self.midpoint_s is not None:
            return self
        lo, hi = self.midpoint_range
        return replace(self, midpoint_s=float(rng.uniform(lo, hi)))


def temperature_factor(decay: DecayParams, temperature_c: float) -> float:
    """Time dilation of decay: doubles every ``temp_doubling_c`` degrees above reference."""
    return 2.0 ** ((temperature_c - decay.temp_ref_c) / decay.temp_doubling_c)


def decay_cdf(decay: DecayParams, elapsed_s: float, temperature_c: float = 20.0) -> float:
    """Model fraction of cells that have lost their value after ``elapsed_s`` unpowered.

    An unresolved ``decay`` (no fixed midpoint) uses the centre of its
    midpoint range.
    """
    if not elapsed_s >= 0:
        raise RangeError(f"elapsed_s must be >= 0, got {elapsed_s}")
    t = elapsed_s * temperature_factor(decay, temperature_c)
    z = (t - decay.nominal_midpoint_s) / decay.slope_s
    # numerically stable logistic
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def hamming_fraction(a, b) -> float:
    a = check_bits(a, "a")
    b = check_bits(b, "b")
    if a.size != b.size:
        raise RangeError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise RangeError("hamming_fraction of empty bit arrays is undefined")
    return float(np.count_nonzero(a != b)) / a.size


@dataclass(eq=False)
class TagState:
    """A simulated tag.

    Cell parameters are stored column-wise (``one_prob``, ``decay_time``)
    rather than as a list of :class:`CellParams`; :meth:`cell` builds one on
    demand.  Mutating methods enforce the power state machine and a
    monotone clock.
    """

    spec: TagSpec
    decay: DecayParams
    one_prob: np.ndarray
    decay_time: np.ndarray
    memory: np.ndarray
    rng: np.random.Generator
    powered: bool = False
    last_power_off_s: Optional[float] = None
    clock_s: float = 0.0
    ever_powered: bool = False
    last_resampled: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_cells(self) -> int:
        return self.memory.size

    @property
    def noisy_mask(self) -> np.ndarray:
        return (self.one_prob > 0) & (self.one_prob < 1)

    def cell(self, index: int) -> CellParams:
        return CellParams(float(self.one_prob[index]), float(self.decay_time[index]))

    @property
    def cells(self) -> list:
        return [self.cell(i) for i in range(self.n_cells)]

    def _tick(self, at_time_s):
        at_time_s = float(at_time_s)
        if not math.isfinite(at_time_s) or at_time_s < self.clock_s:
            raise ClockError(f"time {at_time_s} precedes tag clock {self.clock_s}")
        self.clock_s = at_time_s

    def advance_to(self, at_time_s: float) -> None:
        """Move the clock forward without any power event."""
        self._tick(at_time_s)

    def power_on(self, at_time_s: Optional[float] = None) -> None:
        if self.powered:
            raise TagStateError("tag is already powered")
        at_time_s = self.clock_s if at_time_s is None else at_time_s
        self._tick(at_time_s)
        # Draw for every cell regardless of which ones decayed, so the stream
        # position depends only on the number of power-ups.
        fresh = (self.rng.random(self.n_cells) < self.one_prob).astype(np.uint8)
        if not self.ever_powered:
            resample = np.ones(self.n_cells, dtype=bool)
        else:
            elapsed = (self.clock_s - self.last_power_off_s) * temperature_factor(
                self.decay, self.spec.temperature_c
            )
            resample = elapsed > self.decay_time
        self.memory[resample] = fresh[resample]
        self.last_resampled = resample
        self.powered = True
        self.ever_powered = True

    def power_off(self, at_time_s: Optional[float] = None) -> None:
        if not self.powered:
            raise TagStateError("tag is not powered")
        at_time_s = self.clock_s if at_time_s is None else at_time_s
        self._tick(at_time_s)
        self.powered = False
        self.last_power_off_s = self.clock_s

    def _span(self, offset_bits, len_bits):
        if not self.powered:
            raise PowerError("memory access on an unpowered tag")
        if offset_bits < 0 or len_bits < 0 or offset_bits + len_bits > self.n_cells:
            raise RangeError(
                f"bits [{offset_bits}, {offset_bits + len_bits}) outside memory of {self.n_cells} bits"
            )
        return slice(offset_bits, offset_bits + len_bits)

    def read_bits(self, offset_bits: int = 0, len_bits: Optional[int] = None) -> np.ndarray:
        if len_bits is None:
            len_bits = self.n_cells - offset_bits
        return self.memory[self._span(offset_bits, len_bits)].copy()

    def write_bits(self, offset_bits: int, bits) -> None:
        bits = check_bits(bits)
        self.memory[self._span(offset_bits, bits.size)] = bits

    def copy(self) -> "TagState":
        # rng is deep-copied so the clone replays the same future draws
        state = self.rng.bit_generator.state
        rng = np.random.Generator(type(self.rng.bit_generator)())
        rng.bit_generator.state = state
        return replace(
            self,
            one_prob=self.one_prob.copy(),
            decay_time=self.decay_time.copy(),
            memory=self.memory.copy(),
            rng=rng,
            last_resampled=None if self.last_resampled is None else self.last_resampled.copy(),
        )


def _draw_decay_times(rng, n, midpoint, slope):
    out = rng.logistic(midpoint, slope, size=n)
    bad = out <= 0
    while bad.any():
        out[bad] = rng.logistic(midpoint, slope, size=int(bad.sum()))
        bad = out <= 0
    return out


def create_tag(spec: TagSpec = TagSpec(), decay: DecayParams = DecayParams(), seed: int = 0) -> TagState:
    """Build an unpowered tag at clock 0.

    The seed is split into two independent streams: one fixes the cell
    population (biases, retention times, the tag's decay midpoint), the
    other drives power-up sampling at run time.
    """
    if not isinstance(spec, TagSpec) or not isinstance(decay, DecayParams):
        raise ConstraintError("spec and decay must be TagSpec and DecayParams instances")
    build_ss, runtime_ss = np.random.SeedSequence(int(seed)).spawn(2)
    build = np.random.default_rng(build_ss)
    n = spec.total_bits

    decay = decay.resolve(build)
    if spec.bias_model == "beta":
        one_prob = build.beta(spec.bias_beta_shape, spec.bias_beta_shape, size=n)
    else:
        one_prob = build.integers(0, 2, size=n).astype(float)
        n_noisy = int(round(spec.noisy_fraction * n))
        noisy = build.choice(n, size=n_noisy, replace=False)
        one_prob[noisy] = 0.5
    decay_time = _draw_decay_times(build, n, decay.midpoint_s, decay.slope_s)

    return TagState(
        spec=spec,
        decay=decay,
        one_prob=one_prob,
        decay_time=decay_time,
        memory=np.zeros(n, dtype=np.uint8),
        rng=np.random.default_rng(runtime_ss),
    )


# Memory layouts of the two WISP hardware generations.
GENERATIONS = {
    "wisp41": TagSpec(total_bytes=512, reserved_bytes=136),
    "wisp2x": TagSpec(total_bytes=256, reserved_bytes=112),
}
