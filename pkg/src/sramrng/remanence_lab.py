"""Timed power-off decay experiments and logistic curve fitting.

The experiment fills memory with a seeded pseudorandom pattern, removes
power for a given interval, reads memory back and records the Hamming
fraction against the pattern.  Curves of the form

    h(t) = A / (1 + exp(-(t - t0) / s))

are then fit to the samples.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import least_squares
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_fraction
from .errors import NoFitError, RangeError
from .sram_model import TagState, hamming_fraction

__all__ = [
    "DecaySample",
    "LogisticFit",
    "LogisticDecayRegressor",
    "run_decay_experiment",
    "fit_logistic",
    "full_decay_time",
    "logistic_curve",
    "write_samples_csv",
    "write_fits_csv",
    "parse_intervals",
]

SAMPLE_HEADER = ("tag_id", "interval_s", "hamming_fraction")
FIT_HEADER = ("tag_id", "amplitude", "midpoint_s", "slope_s", "rss")


@dataclass(frozen=True)
class DecaySample:
    tag_id: str
    interval_s: float
    hamming: float

    def __post_init__(self):
        if not self.interval_s >= 0:
            raise RangeError("interval_s must be >= 0")
        if not 0 <= self.hamming <= 1:
            raise RangeError("hamming must lie in [0, 1]")


@dataclass(frozen=True)
class LogisticFit:
    amplitude: float
    midpoint_s: float
    slope_s: float
    rss: float

    def __call__(self, t):
        return logistic_curve(t, self.amplitude, self.midpoint_s, self.slope_s)


def logistic_curve(t, amplitude, midpoint, slope):
    z = -(np.asarray(t, dtype=float) - midpoint) / slope
    # exp overflow past ~709 saturates to the right limit
    with np.errstate(over="ignore"):
        return amplitude / (1.0 + np.exp(z))


def run_decay_experiment(
    tag: TagState,
    intervals: Sequence[float],
    pattern_seed: int,
    tag_id: str = "0",
    bit_generator: str = "PCG64",
) -> list:
    """Measure retention for each off-interval in ``intervals``.

    Each interval gets its own pattern from ``pattern_seed``.  The first
    ``excluded_bytes`` of memory are left out of the Hamming fraction.
    The tag is left powered.
    """
    intervals = [float(t) for t in intervals]
    if any(t < 0 for t in intervals) or intervals != sorted(intervals):
        raise RangeError("intervals must be non-negative and sorted")
    bitgen_cls = getattr(np.random, bit_generator)
    pattern_seeds = np.random.SeedSequence(int(pattern_seed)).spawn(len(intervals))
    skip = tag.spec.excluded_bytes * 8
    n = tag.n_cells

    samples = []
    for t, ss in zip(intervals, pattern_seeds):
        if not tag.powered:
            tag.power_on(tag.clock_s)
        pattern = np.random.Generator(bitgen_cls(ss)).integers(0, 2, size=n, dtype=np.uint8)
        tag.write_bits(0, pattern)
        tag.power_off(tag.clock_s)
        tag.power_on(tag.clock_s + t)
        readback = tag.read_bits(0, n)
        samples.append(DecaySample(tag_id, t, hamming_fraction(pattern[skip:], readback[skip:])))
    return samples


def _grid_start(t, y):
    """Best (A, t0, s) on a coarse grid; A is solved in closed form per cell."""
    t_max = float(t.max()) if t.max() > 0 else 1.0
    t0_grid = np.linspace(0.0, t_max, 121)
    s_grid = np.geomspace(t_max * 1e-3, t_max, 60)
    z = (t[None, None, :] - t0_grid[:, None, None]) / s_grid[None, :, None]
    g = 0.5 * (1.0 + np.tanh(z / 2))  # logistic, overflow-free
    gg = (g * g).sum(axis=2)
    gy = (g * y).sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.clip(np.where(gg > 0, gy / gg, 1.0), 1e-9, 1.0)
    rss = ((amp[..., None] * g - y) ** 2).sum(axis=2)
    order = np.argsort(rss, axis=None, kind="stable")[:5]
    starts = []
    for flat in order:
        i, j = np.unravel_index(flat, rss.shape)
        starts.append((float(amp[i, j]), float(t0_grid[i]), float(s_grid[j])))
    return starts, t_max


def _fit_arrays(t, y):
    if t.size < 4:
        raise NoFitError(f"need at least 4 samples, got {t.size}")
    if np.unique(y).size < 2:
        raise NoFitError("all samples have the same value")
    # canonical order makes the fit independent of input order
    order = np.lexsort((y, t))
    t, y = t[order], y[order]

    starts, t_max = _grid_start(t, y)
    lower = [1e-12, 0.0, t_max * 1e-6]
    upper = [1.0, t_max, t_max]

    def resid(p):
        return logistic_curve(t, *p) - y

    best = None
    for p0 in starts:
        p0 = np.clip(p0, lower, upper)
        sol = least_squares(resid, p0, bounds=(lower, upper), method="trf", x_scale="jac",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        rss = float(np.dot(sol.fun, sol.fun))
        if best is None or rss < best[1]:
            best = (sol.x, rss)
    (a, t0, s), rss = best
    return LogisticFit(float(a), float(t0), float(s), rss)


def fit_logistic(samples: Iterable[DecaySample]) -> LogisticFit:
    """Least-squares logistic fit: coarse grid search, then bounded refinement."""
    samples = list(samples)
    t = np.array([s.interval_s for s in samples], dtype=float)
    y = np.array([s.hamming for s in samples], dtype=float)
    return _fit_arrays(t, y)


def full_decay_time(fit: LogisticFit, threshold_fraction: float = 0.96) -> float:
    """Time at which the fitted curve reaches ``threshold_fraction`` of its asymptote."""
    threshold_fraction = check_fraction(threshold_fraction, "threshold_fraction", open_low=True, open_high=True)
    return fit.midpoint_s + fit.slope_s * math.log(threshold_fraction / (1.0 - threshold_fraction))


class LogisticDecayRegressor(RegressorMixin, BaseEstimator):
    """Scikit-learn wrapper around :func:`fit_logistic`.

    ``X`` is the off-interval in seconds (one column), ``y`` the Hamming
    fraction.  Fitted attributes: ``amplitude_``, ``midpoint_``, ``slope_``,
    ``rss_``.

    Examples
    --------
    >>> import numpy as np
    >>> t = np.arange(0, 61, 5.0)
    >>> y = 0.5 / (1 + np.exp(-(t - 20) / 1.25))
    >>> reg = LogisticDecayRegressor().fit(t.reshape(-1, 1), y)
    >>> round(reg.midpoint_, 3)
    20.0
    """

    def __init__(self, threshold_fraction=0.96):
        self.threshold_fraction = threshold_fraction

    def fit(self, X, y):
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != 1:
            raise RangeError("X must have exactly one column (interval in seconds)")
        y = np.asarray(y, dtype=float).ravel()
        self.n_features_in_ = 1
        self.fit_ = _fit_arrays(X[:, 0].astype(float), y)
        self.amplitude_ = self.fit_.amplitude
        self.midpoint_ = self.fit_.midpoint_s
        self.slope_ = self.fit_.slope_s
        self.rss_ = self.fit_.rss
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X, ensure_2d=True)
        return self.fit_(X[:, 0])

    def full_decay_time(self):
        check_is_fitted(self, "fit_")
        return full_decay_time(self.fit_, self.threshold_fraction)


def parse_intervals(spec: str) -> list:
    """``"start:step:end"`` (inclusive) to a list of seconds."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise RangeError(f"interval spec must be start:step:end, got {spec!r}")
    try:
        start, step, end = (float(p) for p in parts)
    except ValueError:
        raise RangeError(f"non-numeric interval spec {spec!r}") from None
    if step <= 0:
        raise RangeError("interval step must be > 0")
    if start < 0 or end < start:
        raise RangeError("interval spec needs 0 <= start <= end")
    count = int(math.floor((end - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def write_samples_csv(samples: Iterable[DecaySample], fh=None) -> str:
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLE_HEADER)
    for s in samples:
        w.writerow((s.tag_id, _fmt(s.interval_s), _fmt(s.hamming)))
    return buf.getvalue() if fh is None else ""


def write_fits_csv(fits: Iterable[tuple], fh=None) -> str:
    """``fits`` is an iterable of ``(tag_id, LogisticFit)`` pairs."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIT_HEADER)
    for tag_id, f in fits:
        w.writerow((tag_id, _fmt(f.amplitude), _fmt(f.midpoint_s), _fmt(f.slope_s), _fmt(f.rss)))
    return buf.getvalue() if fh is None else ""
