"""Empirical distributions built from spectra: mu_R, radial ESD, spacings,
extremal eigenvalues and the real-line pair correlation.

Histograms use fixed edges so partial results from parallel workers merge
exactly. Two normalizations are supported: ``probability`` (masses sum to 1)
and ``paper_area`` (total mass equals mean_k / k_bar_ref, the convention used
when overlaying conditioned histograms of different k).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .spectra import Spectrum

# reference spacing densities: weak confinement (semi-Poisson) and strong
# confinement (Wigner surmise)


def semi_poisson_pdf(s):
    s = np.asarray(s, dtype=np.float64)
    return 4.0 * s * np.exp(-2.0 * s)


def semi_poisson_cdf(s):
    s = np.asarray(s, dtype=np.float64)
    return 1.0 - np.exp(-2.0 * s) * (1.0 + 2.0 * s)


def wigner_pdf(s):
    s = np.asarray(s, dtype=np.float64)
    return 0.5 * math.pi * s * np.exp(-math.pi * s * s / 4.0)


def wigner_cdf(s):
    s = np.asarray(s, dtype=np.float64)
    return 1.0 - np.exp(-math.pi * s * s / 4.0)


def inverse_semicircle_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = 1.0 / (math.pi * np.sqrt(1.0 - x[inside] ** 2))
    return out


def inverse_semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)
    return np.arcsin(x) / math.pi + 0.5


def standard_cauchy_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (math.pi * (1.0 + x * x))


def standard_cauchy_cdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.arctan(x) / math.pi + 0.5


@dataclass
class Histogram1D:
    """Fixed-edge histogram with explicit overflow bookkeeping."""

    edges: np.ndarray
    masses: np.ndarray
    normalization: str = "probability"
    overflow: float = 0.0
    samples: int = 0
    points: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        return self.masses / self.widths

    def density_at(self, x: float, halo: int = 0) -> float:
        """Density at x, optionally averaged with `halo` neighbouring bins."""
        idx = int(np.searchsorted(self.edges, x, side="right")) - 1
        idx = min(max(idx, 0), len(self.masses) - 1)
        lo, hi = max(0, idx - halo), min(len(self.masses), idx + halo + 1)
        d = self.density()
        return float(d[lo:hi].mean())

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def csv_rows(self):
        for left, right, mass in zip(self.edges[:-1], self.edges[1:], self.masses):
            yield {"bin_left": left, "bin_right": right, "mass": mass}

    def metadata_json(self) -> str:
        doc = dict(self.meta)
        doc.update(
            normalization=self.normalization,
            overflow=self.overflow,
            samples=self.samples,
            points=self.points,
        )
        return json.dumps(doc)


class HistogramAccumulator:
    """Mergeable counts on fixed edges; exact under any reduction order."""

    def __init__(self, edges: Sequence[float]):
        self.edges = np.asarray(edges, dtype=np.float64)
        if self.edges.size < 2 or np.any(np.diff(self.edges) <= 0):
            raise ConfigurationError("histogram edges must be strictly increasing")
        self.counts = np.zeros(self.edges.size - 1, dtype=np.int64)
        self.outside = 0
        self.samples = 0
        self.weight_sum = 0.0  # e.g. sum of k over samples, for paper_area

    def add(self, values: np.ndarray, weight: float = 0.0) -> None:
        values = np.asarray(values, dtype=np.float64)
        self.samples += 1
        self.weight_sum += weight
        if values.size == 0:
            return
        inside = (values >= self.edges[0]) & (values <= self.edges[-1])
        self.outside += int(values.size - inside.sum())
        self.counts += np.histogram(values[inside], bins=self.edges)[0]

    def merge(self, other: "HistogramAccumulator") -> "HistogramAccumulator":
        if not np.array_equal(self.edges, other.edges):
            raise ConfigurationError("cannot merge histograms with different edges")
        self.counts += other.counts
        self.outside += other.outside
        self.samples += other.samples
        self.weight_sum += other.weight_sum
        return self

    @property
    def points(self) -> int:
        return int(self.counts.sum()) + self.outside

    def finalize(
        self, normalization: str = "probability", k_bar_ref: Optional[float] = None, meta=None
    ) -> Histogram1D:
        total = self.points
        if normalization == "probability":
            scale = 1.0 / total if total else 0.0
        elif normalization == "paper_area":
            if not k_bar_ref:
                raise ConfigurationError("paper_area normalization needs k_bar_ref")
            # total mass = (sum_s k_s) / (samples * k_bar)
            scale = 1.0 / (self.samples * k_bar_ref) if self.samples else 0.0
        else:
            raise ConfigurationError(f"normalization: unknown mode {normalization!r}")
        hist = Histogram1D(
            edges=self.edges.copy(),
            masses=self.counts * scale,
            normalization=normalization,
            overflow=self.outside * scale,
            samples=self.samples,
            points=total,
            meta=dict(meta or {}),
        )
        return hist

    def to_dict(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "counts": self.counts.tolist(),
            "outside": self.outside,
            "samples": self.samples,
            "weight_sum": self.weight_sum,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HistogramAccumulator":
        acc = cls(doc["edges"])
        acc.counts = np.asarray(doc["counts"], dtype=np.int64)
        acc.outside = doc["outside"]
        acc.samples = doc["samples"]
        acc.weight_sum = doc["weight_sum"]
        return acc


def symmetric_edges(half_width: float, bins: int) -> np.ndarray:
    return np.linspace(-half_width, half_width, bins + 1)


def mu_r(
    spectra: Iterable[Spectrum],
    bins: int = 50,
    normalization: str = "probability",
    half_width: float = 1.5,
    k_bar_ref: Optional[float] = None,
    meta=None,
) -> Histogram1D:
    """Histogram of real eigenvalues, symmetric about 0.

    Raises no error on an empty stream of real values; the returned histogram
    carries ``meta['empty'] = True`` instead so campaign code can flag it.
    """
    acc = HistogramAccumulator(symmetric_edges(half_width, bins))
    for spectrum in spectra:
        acc.add(spectrum.real_values, weight=spectrum.k)
    hist = acc.finalize(normalization, k_bar_ref=k_bar_ref, meta=meta)
    if acc.points == 0:
        hist.meta["empty"] = True
    return hist


def l1_to_cdf(hist: Histogram1D, cdf: Callable) -> float:
    """L1 distance between the histogram (probability masses) and a reference law.

    Mass outside the window is compared against the reference tail mass, so a
    distribution escaping the window is penalized rather than ignored.
    """
    if hist.normalization != "probability":
        raise ConfigurationError("L1 comparison needs probability normalization")
    ref = np.diff(cdf(hist.edges))
    inside = float(np.abs(hist.masses - ref).sum())
    ref_tail = 1.0 - float(cdf(hist.edges[-1]) - cdf(hist.edges[0]))
    return inside + abs(hist.overflow - ref_tail)


def bimodality_index(hist: Histogram1D, x_ref: float = 0.8, halo: int = 1) -> float:
    """density(|x| = x_ref) / density(0); > 1 flags bimodality, < 1 unimodality."""
    flank = 0.5 * (hist.density_at(+x_ref, halo) + hist.density_at(-x_ref, halo))
    center = hist.density_at(0.0, halo)
    if center == 0.0:
        return math.inf if flank > 0 else math.nan
    return flank / center


def esd_radial(spectra: Iterable[Spectrum], bins: int = 60, r_max: float = 2.0):
    """Angular-averaged ESD density rho(r): counts per annulus area per sample per n."""
    edges = np.linspace(0.0, r_max, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    outside = 0
    samples = 0
    n = None
    for spectrum in spectra:
        n = spectrum.n
        samples += 1
        radii = np.abs(spectrum.eigenvalues)
        inside = radii <= r_max
        outside += int((~inside).sum())
        counts += np.histogram(radii[inside], bins=edges)[0]
    if samples == 0 or n is None:
        raise ConfigurationError("esd_radial needs at least one spectrum")
    areas = math.pi * np.diff(edges**2)
    density = counts / (areas * samples * n)
    hist = Histogram1D(
        edges=edges,
        masses=density,
        normalization="probability",
        overflow=outside / (samples * n),
        samples=samples,
        points=int(counts.sum()) + outside,
        meta={"kind": "esd_radial", "n": n},
    )
    return hist


@dataclass
class SpacingResult:
    histogram: Histogram1D
    l1_semi_poisson: float
    l1_wigner: float
    skipped_samples: int
    mean_spacing: float


def _unfolded_spacings(reals: np.ndarray) -> np.ndarray:
    """Per-sample unfolding against a kernel-smoothed local density.

    The local mean spacing at each gap midpoint is 1/rho(x), with rho a
    Gaussian kernel estimate (bandwidth twice the global mean spacing), so
    spacing statistics become density-independent.
    """
    lam = np.sort(reals)
    gaps = np.diff(lam)
    span = lam[-1] - lam[0]
    if span <= 0:
        return np.array([])
    mean_spacing = span / (len(lam) - 1)
    bandwidth = 2.0 * mean_spacing
    mids = 0.5 * (lam[:-1] + lam[1:])
    z = (mids[:, None] - lam[None, :]) / bandwidth
    rho = np.exp(-0.5 * z * z).sum(axis=1) / (bandwidth * math.sqrt(2.0 * math.pi))
    return gaps * rho


def spacings(
    spectra: Iterable[Spectrum],
    bins: int = 40,
    s_max: float = 4.0,
    reals_override: Optional[Iterable[np.ndarray]] = None,
) -> SpacingResult:
    """Normalized consecutive real-eigenvalue gaps with reference L1 distances.

    Samples with fewer than 3 real eigenvalues cannot be unfolded and are
    skipped; their number is reported. ``reals_override`` feeds raw position
    arrays directly (used for gas snapshots).
    """
    edges = np.linspace(0.0, s_max, bins + 1)
    acc = HistogramAccumulator(edges)
    skipped = 0
    spacing_sum = 0.0
    spacing_count = 0
    streams = reals_override if reals_override is not None else (s.real_values for s in spectra)
    for reals in streams:
        reals = np.asarray(reals, dtype=np.float64)
        if reals.size < 3:
            skipped += 1
            continue
        s = _unfolded_spacings(reals)
        acc.add(s)
        spacing_sum += float(s.sum())
        spacing_count += s.size
    hist = acc.finalize("probability", meta={"kind": "spacings"})
    return SpacingResult(
        histogram=hist,
        l1_semi_poisson=l1_to_cdf(hist, semi_poisson_cdf),
        l1_wigner=l1_to_cdf(hist, wigner_cdf),
        skipped_samples=skipped,
        mean_spacing=spacing_sum / spacing_count if spacing_count else math.nan,
    )


@dataclass
class ExtremalResult:
    largest_real: Histogram1D
    largest_complex_re: Histogram1D
    p_real_leading: float
    samples: int


def extremal(
    spectra: Iterable[Spectrum], bins: int = 50, window: tuple = (-0.5, 2.0)
) -> ExtremalResult:
    """Distributions of the largest real eigenvalue and the largest real part
    among non-real eigenvalues, plus the probability the overall leading
    eigenvalue is real."""
    edges = np.linspace(window[0], window[1], bins + 1)
    real_acc = HistogramAccumulator(edges)
    complex_acc = HistogramAccumulator(edges)
    leading_real = 0
    samples = 0
    for spectrum in spectra:
        samples += 1
        has_reals = spectrum.k > 0
        has_pairs = len(spectrum.pair_representatives) > 0
        max_real = spectrum.real_values[-1] if has_reals else -math.inf
        max_complex = spectrum.pair_representatives.real.max() if has_pairs else -math.inf
        if has_reals:
            real_acc.add(np.array([max_real]))
        if has_pairs:
            complex_acc.add(np.array([max_complex]))
        if has_reals and max_real >= max_complex:
            leading_real += 1
    if samples == 0:
        raise ConfigurationError("extremal needs at least one spectrum")
    return ExtremalResult(
        largest_real=real_acc.finalize("probability", meta={"kind": "largest_real"}),
        largest_complex_re=complex_acc.finalize("probability", meta={"kind": "largest_complex_re"}),
        p_real_leading=leading_real / samples,
        samples=samples,
    )


def two_point_real(
    spectra_or_reals: Iterable, r_grid: Sequence[float], intensity_bins: int = 200
):
    """Empirical pair correlation g(r) of real eigenvalues, Poisson baseline 1.

    The baseline is the separation distribution a Poisson process with the
    ensemble's averaged intensity profile would produce, so constant g = 1
    indicates no correlations beyond the density itself.
    """
    r_grid = np.asarray(r_grid, dtype=np.float64)
    per_sample = []
    for item in spectra_or_reals:
        reals = item.real_values if isinstance(item, Spectrum) else np.asarray(item, dtype=np.float64)
        per_sample.append(np.sort(reals))
    samples = len(per_sample)
    if samples == 0:
        raise ConfigurationError("two_point_real needs at least one sample")
    pooled = np.concatenate([r for r in per_sample if r.size]) if any(
        r.size for r in per_sample
    ) else np.array([])
    lo, hi = pooled.min(), pooled.max()
    grid = np.linspace(lo, hi, intensity_bins + 1)
    h = grid[1] - grid[0]
    intensity = np.histogram(pooled, bins=grid)[0] / (samples * h)  # per unit length

    observed = np.zeros(r_grid.size - 1)
    for reals in per_sample:
        if reals.size < 2:
            continue
        seps = np.abs(reals[:, None] - reals[None, :])[np.triu_indices(reals.size, k=1)]
        observed += np.histogram(seps, bins=r_grid)[0]
    observed /= samples

    expected = np.zeros(r_grid.size - 1)
    # E[unordered pairs at separation ~ r] = h^2 * sum_g c_g * c_{g+offset}
    for b in range(r_grid.size - 1):
        off_lo = int(math.floor(r_grid[b] / h))
        off_hi = max(off_lo + 1, int(math.floor(r_grid[b + 1] / h)))
        total = 0.0
        for off in range(off_lo, off_hi):
            if off == 0:
                continue
            total += float(np.dot(intensity[:-off], intensity[off:]))
        expected[b] = total * h * h
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(expected > 0, observed / expected, np.nan)
    centers = 0.5 * (r_grid[:-1] + r_grid[1:])
    return centers, g, observed, expected
