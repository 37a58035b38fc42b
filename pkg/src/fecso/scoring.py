"""Brier-score evaluation of blockwise soft output.

Forecasts ``s`` are probabilities that a decoding is correct and outcomes
``o`` are 1 for a correct decoding.  The always-confident forecaster
(s = 1) scores exactly the block error rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ForecastRecord:
    s: float
    o: int

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"forecast {self.s} outside [0, 1]")
        if self.o not in (0, 1):
            raise ValueError(f"outcome {self.o} not in {{0, 1}}")


def records_to_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    records = list(records)
    s = np.array([r.s for r in records], dtype=np.float64)
    o = np.array([r.o for r in records], dtype=np.float64)
    return s, o


def _arrays(s, o) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(s, dtype=np.float64).ravel()
    o = np.asarray(o, dtype=np.float64).ravel()
    if s.size == 0:
        raise ValueError("no forecasts to score")
    if s.shape != o.shape:
        raise ValueError("forecast and outcome arrays differ in length")
    return s, o


def brier_score(s, o) -> float:
    s, o = _arrays(s, o)
    return math.fsum((s - o) ** 2) / s.size


def bler(o) -> float:
    o = np.asarray(o, dtype=np.float64).ravel()
    if o.size == 0:
        raise ValueError("no outcomes")
    return math.fsum(1.0 - o) / o.size


def bsr(bs: float, reference_bler: float) -> float | None:
    """Brier score over the lowest block error rate; None when that rate is zero."""
    if reference_bler <= 0:
        return None
    return bs / reference_bler


def bin_midpoints(bins: int) -> np.ndarray:
    return (np.arange(bins) + 0.5) / bins


def bin_index(s, bins: int) -> np.ndarray:
    """Equal-width bin over [0, 1]; s = 1 falls in the top bin."""
    return np.minimum((np.asarray(s, dtype=np.float64) * bins).astype(np.int64), bins - 1)


def quantize(s, bins: int = 100) -> np.ndarray:
    return bin_midpoints(bins)[bin_index(s, bins)]


def brier_decomposition(s, o, bins: int = 100, values=None) -> tuple[float, float]:
    """Calibration and refinement terms of the Brier score.

    With ``values`` (a finite forecast set) every ``s`` must be one of them
    and the two terms sum to :func:`brier_score` exactly.  Otherwise ``s`` is
    quantized to the midpoints of ``bins`` equal-width bins and the identity
    holds for the quantized forecasts.
    """
    s, o = _arrays(s, o)
    if values is not None:
        levels = np.unique(np.asarray(values, dtype=np.float64))
        idx = np.searchsorted(levels, s)
        idx = np.minimum(idx, levels.size - 1)
        if not np.array_equal(levels[idx], s):
            raise ValueError("forecasts outside the quantizer value set")
    else:
        levels = bin_midpoints(bins)
        idx = bin_index(s, bins)
    counts = np.bincount(idx, minlength=levels.size).astype(np.float64)
    hits = np.bincount(idx, weights=o, minlength=levels.size)
    return _decompose(levels, counts, hits, s.size)


def _decompose(levels, counts, hits, total) -> tuple[float, float]:
    occupied = counts > 0
    v = counts[occupied] / total
    rho = hits[occupied] / counts[occupied]
    lv = levels[occupied]
    calibration = math.fsum(v * (lv - rho) ** 2)
    refinement = math.fsum(v * rho * (1.0 - rho))
    return calibration, refinement


@dataclass(frozen=True)
class CalibrationRow:
    center: float
    v: float
    rho: float
    count: int
    mean_s: float


def calibration_table(s, o, bins: int = 10) -> list[CalibrationRow]:
    """Per-bin forecast frequency, accuracy and mean forecast (empty bins omitted)."""
    if bins < 1:
        raise ValueError("need at least one bin")
    s, o = _arrays(s, o)
    idx = bin_index(s, bins)
    counts = np.bincount(idx, minlength=bins)
    hits = np.bincount(idx, weights=o, minlength=bins)
    sums = np.bincount(idx, weights=s, minlength=bins)
    mids = bin_midpoints(bins)
    return [
        CalibrationRow(float(mids[j]), counts[j] / s.size, hits[j] / counts[j], int(counts[j]), sums[j] / counts[j])
        for j in range(bins)
        if counts[j]
    ]


@dataclass
class ScoreAccumulator:
    """Mergeable running sums for one (point, decoder, list size, method) cell.

    Partial accumulators from disjoint trial shards combine with
    :meth:`merge`; merging in a fixed order gives bit-identical results.
    """

    bins: int = 100
    n: int = 0
    sq_error: float = 0.0
    errors: float = 0.0
    counts: np.ndarray = field(default=None, repr=False)
    hits: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.bins, dtype=np.int64)
        if self.hits is None:
            self.hits = np.zeros(self.bins, dtype=np.int64)

    def update(self, s, o) -> None:
        s = np.asarray(s, dtype=np.float64).ravel()
        o = np.asarray(o, dtype=np.int64).ravel()
        if s.size == 0:
            return
        self.n += s.size
        self.sq_error += math.fsum((s - o) ** 2)
        self.errors += float(s.size - o.sum())
        idx = bin_index(s, self.bins)
        self.counts += np.bincount(idx, minlength=self.bins)
        self.hits += np.bincount(idx, weights=o, minlength=self.bins).astype(np.int64)

    def merge(self, other: "ScoreAccumulator") -> "ScoreAccumulator":
        if other.bins != self.bins:
            raise ValueError("cannot merge accumulators with different bin counts")
        return ScoreAccumulator(
            self.bins,
            self.n + other.n,
            self.sq_error + other.sq_error,
            self.errors + other.errors,
            self.counts + other.counts,
            self.hits + other.hits,
        )

    @property
    def brier(self) -> float:
        return self.sq_error / self.n

    @property
    def bler(self) -> float:
        return self.errors / self.n

    def decomposition(self) -> tuple[float, float]:
        return _decompose(bin_midpoints(self.bins), self.counts.astype(np.float64), self.hits.astype(np.float64), self.n)


@dataclass(frozen=True)
class ScoreSummary:
    eb_n0_db: float
    decoder: str
    so_method: str
    L: int
    n: int
    bs: float
    calibration_term: float
    refinement_term: float
    bler: float
    bsr: float | None = None


def summarize(acc: ScoreAccumulator, eb_n0_db: float, decoder: str, so_method: str, L: int) -> ScoreSummary:
    cal, ref = acc.decomposition()
    return ScoreSummary(float(eb_n0_db), decoder, so_method, L, acc.n, acc.brier, cal, ref, acc.bler)


def bootstrap_mean_ci(values, level: float = 0.95, resamples: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean of ``values``."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValueError("no values")
    rng = np.random.default_rng(seed)
    means = np.empty(resamples)
    for i in range(resamples):
        means[i] = x[rng.integers(0, x.size, x.size)].mean()
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def paired_brier_difference_ci(s_a, s_b, o, level: float = 0.95, resamples: int = 1000, seed: int = 0):
    """Bootstrap interval for BS(a) - BS(b) scored on the same trials."""
    s_a, o_ = _arrays(s_a, o)
    s_b, _ = _arrays(s_b, o)
    d = (s_a - o_) ** 2 - (s_b - o_) ** 2
    return bootstrap_mean_ci(d, level, resamples, seed)
