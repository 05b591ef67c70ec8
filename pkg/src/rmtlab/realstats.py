"""Statistics of the number of real eigenvalues.

Counts are folded into mergeable accumulators whose state is exact (integer
sums and an integer histogram), so any parallel reduction order yields
identical summaries.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import ks_2samp

from .errors import ConfigurationError, InsufficientDataError
from .rng import generator
from .spectra import Spectrum

TWO_MINUS_SQRT2 = 2.0 - math.sqrt(2.0)


def ginibre_mean_k(n: int) -> float:
    """Leading-order expected number of real eigenvalues for the Gaussian iid family."""
    return math.sqrt(2.0 * n / math.pi) + 0.5


def parity_round(values: np.ndarray, n: int) -> np.ndarray:
    """Round to the nearest integer sharing the parity of n."""
    r = n % 2
    return 2.0 * np.round((np.asarray(values) - r) / 2.0) + r


@dataclass
class CountAccumulator:
    """Mergeable tally of k over a stream of spectra sharing (family, n)."""

    n: int
    family_label: str = ""
    samples: int = 0
    sum_k: int = 0
    sum_k2: int = 0
    histogram: Counter = field(default_factory=Counter)

    def add(self, k: int) -> None:
        if (k - self.n) % 2 != 0:
            raise ConfigurationError(f"parity violation: k={k} for n={self.n}")
        self.samples += 1
        self.sum_k += k
        self.sum_k2 += k * k
        self.histogram[int(k)] += 1

    def add_spectrum(self, spectrum: Spectrum) -> None:
        if spectrum.n != self.n:
            raise ConfigurationError(f"mixed sizes in count stream: {spectrum.n} != {self.n}")
        self.add(spectrum.k)

    def merge(self, other: "CountAccumulator") -> "CountAccumulator":
        if other.n != self.n:
            raise ConfigurationError("cannot merge accumulators of different n")
        self.samples += other.samples
        self.sum_k += other.sum_k
        self.sum_k2 += other.sum_k2
        self.histogram.update(other.histogram)
        return self

    def k_values(self) -> np.ndarray:
        """Reconstruct the exact multiset of observed counts from the histogram."""
        values = np.empty(self.samples, dtype=np.int64)
        pos = 0
        for k in sorted(self.histogram):
            c = self.histogram[k]
            values[pos : pos + c] = k
            pos += c
        return values

    @property
    def mean_k(self) -> float:
        return self.sum_k / self.samples

    @property
    def var_k(self) -> float:
        if self.samples < 2:
            raise InsufficientDataError("variance needs at least 2 samples")
        return (self.sum_k2 - self.sum_k * self.sum_k / self.samples) / (self.samples - 1)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "family_label": self.family_label,
            "samples": self.samples,
            "sum_k": self.sum_k,
            "sum_k2": self.sum_k2,
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CountAccumulator":
        acc = cls(n=doc["n"], family_label=doc.get("family_label", ""))
        acc.samples = doc["samples"]
        acc.sum_k = doc["sum_k"]
        acc.sum_k2 = doc["sum_k2"]
        acc.histogram = Counter({int(k): v for k, v in doc["histogram"].items()})
        return acc


@dataclass
class CountSummary:
    n: int
    family_label: str
    samples: int
    mean_k: float
    var_k: float
    histogram: dict
    ks_statistic: Optional[float] = None
    ks_pvalue: Optional[float] = None
    degenerate: bool = False

    def csv_row(self) -> dict:
        return {
            "family": self.family_label,
            "n": self.n,
            "samples": self.samples,
            "mean_k": self.mean_k,
            "var_k": self.var_k,
            "var_over_mean": self.var_k / self.mean_k if self.mean_k else float("nan"),
            "ks_statistic": self.ks_statistic,
            "ks_pvalue": self.ks_pvalue,
        }

    def histogram_sidecar(self) -> str:
        return json.dumps(
            {"family": self.family_label, "n": self.n, "histogram": {str(k): v for k, v in sorted(self.histogram.items())}}
        )


def normalize_and_test(k_values: Sequence[int], n: int, seed: int = 0):
    """Center and rescale counts, then KS-test them against a parity-rounded Gaussian.

    k* uses the empirical mean with the (2 - sqrt(2)) * mean variance model.
    The reference sample has the same size, is drawn from a Gaussian with the
    empirical mean and variance, and is rounded to the nearest integer of the
    parity of n, which is what makes a two-sample comparison of a discrete
    count against a continuous law meaningful. The reference stream is seeded,
    so the whole test replays exactly.

    Returns (k_star, ks_statistic, ks_pvalue); the KS fields are None when the
    sample is degenerate (all counts equal).
    """
    k = np.asarray(k_values, dtype=np.float64)
    if k.size < 500:
        raise InsufficientDataError(f"normalize_and_test needs >= 500 values, got {k.size}")
    mean = k.mean()
    var = k.var(ddof=1)
    k_star = (k - mean) / math.sqrt(TWO_MINUS_SQRT2 * mean)
    if var == 0.0:
        return k_star, None, None
    rng = generator(seed)
    reference = parity_round(mean + math.sqrt(var) * rng.standard_normal(k.size), n)
    stat, pvalue = ks_2samp(k, reference)
    return k_star, float(stat), float(pvalue)


def summarize_counts(
    spectra: Iterable[Spectrum],
    family_label: str = "",
    n: Optional[int] = None,
    ks_seed: int = 0,
) -> CountSummary:
    """Mean, variance, histogram and Gaussianity test of k over a stream."""
    acc = None
    for spectrum in spectra:
        if acc is None:
            acc = CountAccumulator(n=n if n is not None else spectrum.n, family_label=family_label)
        acc.add_spectrum(spectrum)
    if acc is None or acc.samples < 2:
        raise InsufficientDataError("summarize_counts needs at least 2 spectra")
    return summary_from_accumulator(acc, ks_seed=ks_seed)


def summary_from_accumulator(acc: CountAccumulator, ks_seed: int = 0) -> CountSummary:
    stat = pvalue = None
    degenerate = len(acc.histogram) == 1
    if acc.samples >= 500 and not degenerate:
        _, stat, pvalue = normalize_and_test(acc.k_values(), acc.n, seed=ks_seed)
    return CountSummary(
        n=acc.n,
        family_label=acc.family_label,
        samples=acc.samples,
        mean_k=acc.mean_k,
        var_k=acc.var_k,
        histogram=dict(acc.histogram),
        ks_statistic=stat,
        ks_pvalue=pvalue,
        degenerate=degenerate,
    )


def interval_counts(spectrum: Spectrum, intervals: Sequence[tuple]) -> list:
    """Real-eigenvalue count in each [a, b) interval; intervals must be disjoint."""
    ordered = sorted(intervals)
    for (a0, b0), (a1, _) in zip(ordered, ordered[1:]):
        if a1 < b0:
            raise ConfigurationError(f"overlapping intervals: [{a0},{b0}) and [{a1},..)")
    reals = spectrum.real_values
    return [int(np.sum((reals >= a) & (reals < b))) for a, b in intervals]


def interval_count_star(count: int, n: int, length: float) -> float:
    """CLT normalization of an interval count inside the bulk."""
    mean = math.sqrt(n / (2.0 * math.pi)) * length
    return (count - mean) / math.sqrt(TWO_MINUS_SQRT2 * mean)


class CumulativeCountAccumulator:
    """Exact joint moments of the cumulative counts k([-1, x]) over a grid.

    Stores integer sums and cross-products, so merging partial accumulators in
    any order reproduces the single-pass result bit for bit.
    """

    def __init__(self, grid: Sequence[float], n: int):
        self.grid = np.asarray(grid, dtype=np.float64)
        if self.grid.size < 3 or np.any(np.diff(self.grid) <= 0):
            raise ConfigurationError("grid must be increasing with at least 3 points")
        self.n = n
        self.samples = 0
        self.sum = np.zeros(self.grid.size, dtype=np.int64)
        self.cross = np.zeros((self.grid.size, self.grid.size), dtype=np.int64)

    def add_reals(self, reals: np.ndarray) -> None:
        reals = np.sort(np.asarray(reals, dtype=np.float64))
        counts = np.searchsorted(reals, self.grid, side="left") - np.searchsorted(
            reals, -1.0, side="left"
        )
        self.samples += 1
        self.sum += counts
        self.cross += np.outer(counts, counts)

    def merge(self, other: "CumulativeCountAccumulator") -> "CumulativeCountAccumulator":
        if not np.array_equal(self.grid, other.grid) or self.n != other.n:
            raise ConfigurationError("cannot merge cumulative accumulators with different grids")
        self.samples += other.samples
        self.sum += other.sum
        self.cross += other.cross
        return self

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.tolist(),
            "n": self.n,
            "samples": self.samples,
            "sum": self.sum.tolist(),
            "cross": self.cross.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "CumulativeCountAccumulator":
        acc = cls(doc["grid"], doc["n"])
        acc.samples = doc["samples"]
        acc.sum = np.asarray(doc["sum"], dtype=np.int64)
        acc.cross = np.asarray(doc["cross"], dtype=np.int64)
        return acc

    def mean_counts(self) -> np.ndarray:
        return self.sum / self.samples

    def count_cov(self) -> np.ndarray:
        m = self.mean_counts()
        return (self.cross - self.samples * np.outer(m, m)) / (self.samples - 1)


@dataclass
class BrownianProfile:
    grid: np.ndarray
    mean_star: np.ndarray
    var_cumulative: np.ndarray
    increment_cov: np.ndarray
    samples: int

    def rows(self):
        for x, m, v in zip(self.grid, self.mean_star, self.var_cumulative):
            yield {"x": x, "mean_k_star": m, "var_count": v}


def profile_from_accumulator(acc: CumulativeCountAccumulator) -> BrownianProfile:
    """Normalized cumulative-count profile and increment covariance matrix.

    Increments between consecutive grid points are normalized by the interval
    CLT, so their covariance matrix should approach the identity when counts
    in disjoint intervals are independent.
    """
    grid = acc.grid
    n = acc.n
    lengths = grid - (-1.0)
    mean_counts = acc.mean_counts()
    mean_star = np.zeros(grid.size)
    positive = lengths > 0
    mu = np.sqrt(n / (2.0 * math.pi)) * lengths[positive]
    mean_star[positive] = (mean_counts[positive] - mu) / np.sqrt(TWO_MINUS_SQRT2 * mu)
    cov = acc.count_cov()
    var_cum = np.diag(cov)

    # increments are a linear map of the cumulative counts
    g = grid.size
    diff = np.zeros((g - 1, g))
    for i in range(g - 1):
        diff[i, i], diff[i, i + 1] = -1.0, 1.0
    inc_cov_raw = diff @ cov @ diff.T
    inc_mu = np.sqrt(n / (2.0 * math.pi)) * np.diff(grid)
    scale = 1.0 / np.sqrt(TWO_MINUS_SQRT2 * inc_mu)
    inc_cov = inc_cov_raw * np.outer(scale, scale)
    return BrownianProfile(grid, mean_star, var_cum, inc_cov, acc.samples)


def brownian_profile(spectra: Iterable[Spectrum], grid: Sequence[float]) -> BrownianProfile:
    """Streaming wrapper over profile_from_accumulator."""
    acc = None
    for spectrum in spectra:
        if acc is None:
            acc = CumulativeCountAccumulator(grid, spectrum.n)
        acc.add_reals(spectrum.real_values)
    if acc is None or acc.samples < 2:
        raise InsufficientDataError("brownian_profile needs at least 2 spectra")
    return profile_from_accumulator(acc)


class IntervalJointAccumulator:
    """Exact joint moments of per-interval real-eigenvalue counts."""

    def __init__(self, intervals: Sequence[tuple], n: int):
        ordered = sorted(intervals)
        for (a0, b0), (a1, _) in zip(ordered, ordered[1:]):
            if a1 < b0:
                raise ConfigurationError("overlapping intervals")
        self.intervals = [tuple(map(float, iv)) for iv in intervals]
        self.n = n
        self.samples = 0
        m = len(self.intervals)
        self.sum = np.zeros(m, dtype=np.int64)
        self.cross = np.zeros((m, m), dtype=np.int64)

    def add_reals(self, reals: np.ndarray) -> None:
        reals = np.asarray(reals, dtype=np.float64)
        counts = np.array(
            [int(np.sum((reals >= a) & (reals < b))) for a, b in self.intervals],
            dtype=np.int64,
        )
        self.samples += 1
        self.sum += counts
        self.cross += np.outer(counts, counts)

    def merge(self, other: "IntervalJointAccumulator") -> "IntervalJointAccumulator":
        if self.intervals != other.intervals or self.n != other.n:
            raise ConfigurationError("cannot merge interval accumulators with different intervals")
        self.samples += other.samples
        self.sum += other.sum
        self.cross += other.cross
        return self

    def to_dict(self) -> dict:
        return {
            "intervals": [list(iv) for iv in self.intervals],
            "n": self.n,
            "samples": self.samples,
            "sum": self.sum.tolist(),
            "cross": self.cross.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IntervalJointAccumulator":
        acc = cls([tuple(iv) for iv in doc["intervals"]], doc["n"])
        acc.samples = doc["samples"]
        acc.sum = np.asarray(doc["sum"], dtype=np.int64)
        acc.cross = np.asarray(doc["cross"], dtype=np.int64)
        return acc

    def means(self) -> np.ndarray:
        return self.sum / self.samples

    def correlation(self, i: int = 0, j: int = 1) -> float:
        m = self.means()
        cov = (self.cross - self.samples * np.outer(m, m)) / (self.samples - 1)
        denom = math.sqrt(cov[i, i] * cov[j, j])
        return float(cov[i, j] / denom) if denom > 0 else math.nan
