"""Eigenvalues of real matrices and pencils, with exact real/pair classification.

The number of real eigenvalues is read off the block structure of the real
Schur form: LAPACK's QR iteration deflates a real matrix into 1x1 blocks
(real eigenvalues, imaginary part set to exactly 0.0) and 2x2 blocks
(conjugate pairs with imaginary parts +-b, b > 0). Classification therefore
tests ``imag == 0.0`` exactly; no tolerance is ever applied to a computed
imaginary part. The same holds for the generalized Schur form of a pencil.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.linalg import get_lapack_funcs

from .ensembles import MatrixSample
from .errors import ConfigurationError, NumericalError

ArrayLike = Union[np.ndarray, MatrixSample]


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [x0, x1] x [y0, y1] in the complex plane."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ConfigurationError("region: rectangle side lengths must be nonnegative")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def to_dict(self) -> dict:
        return {"x0": self.x0, "x1": self.x1, "y0": self.y0, "y1": self.y1}


@dataclass
class Spectrum:
    """All n eigenvalues of one sample with their real/pair classification."""

    eigenvalues: np.ndarray
    real_values: np.ndarray
    pair_representatives: np.ndarray
    n: int
    k: int
    source_seed: int = 0

    def __post_init__(self):
        if self.k + 2 * len(self.pair_representatives) != self.n:
            raise NumericalError(
                f"classification mismatch: k={self.k}, pairs={len(self.pair_representatives)}, n={self.n}",
                seed=self.source_seed,
            )


def _classify(values: np.ndarray, n: int, seed: int) -> Spectrum:
    values = np.asarray(values)
    if not np.iscomplexobj(values):
        values = values.astype(np.complex128)
    real_mask = values.imag == 0.0
    reals = np.sort(values.real[real_mask])
    pairs = values[values.imag > 0.0]
    return Spectrum(values, reals, pairs, n, int(real_mask.sum()), seed)


def _entries_of(sample: ArrayLike) -> np.ndarray:
    return sample.entries if isinstance(sample, MatrixSample) else np.asarray(sample)


def _seed_of(sample: ArrayLike) -> int:
    return sample.seed if isinstance(sample, MatrixSample) else 0


def eigen_spectrum(sample: ArrayLike) -> Spectrum:
    """Spectrum of a real matrix with structurally exact classification."""
    m = _entries_of(sample)
    seed = _seed_of(sample)
    if np.iscomplexobj(m):
        raise ConfigurationError("eigen_spectrum classifies real matrices only")
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries", seed=seed)
    try:
        values = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver did not converge: {exc}", seed=seed) from exc
    return _classify(values, m.shape[0], seed)


def count_real(matrix: np.ndarray) -> int:
    """Number of real eigenvalues; fast path used inside sampling loops."""
    values = np.linalg.eigvals(matrix)
    if not np.iscomplexobj(values):
        return matrix.shape[0]
    return int(np.sum(values.imag == 0.0))


def generalized_spectrum(a: ArrayLike, b: ArrayLike) -> Spectrum:
    """The n roots of det(A - lambda B) via the QZ reduction of the pencil."""
    am = _entries_of(a)
    bm = _entries_of(b)
    seed = _seed_of(a)
    if am.shape != bm.shape:
        raise ConfigurationError("pencil matrices must share dimension")
    if np.array_equal(am, bm):
        # det(A - lambda A) = det(A) (1 - lambda)^n exactly; QZ cannot see
        # through this degeneracy in floating point, so short-circuit it
        n = am.shape[0]
        return _classify(np.ones(n, dtype=np.complex128), n, seed)
    if np.allclose(bm, np.eye(bm.shape[0])):
        return eigen_spectrum(a)
    ggev, = get_lapack_funcs(("ggev",), (am, bm))
    alphar, alphai, beta, _, _, _, info = ggev(am, bm, compute_vl=0, compute_vr=0)
    if info != 0:
        raise NumericalError(f"QZ iteration failed (info={info})", seed=seed)
    if np.any(beta == 0.0) or np.any(np.abs(alphar) + np.abs(alphai) > 1e12 * np.abs(beta)):
        raise NumericalError("pencil numerically singular; resample advised", seed=seed)
    values = (alphar + 1j * alphai) / beta
    return _classify(values, am.shape[0], seed)


def spectrum_of(sample: MatrixSample) -> Spectrum:
    """Dispatch to the plain or generalized eigenproblem for this sample."""
    if sample.companion is not None:
        return generalized_spectrum(sample, sample.companion)
    return eigen_spectrum(sample)


def count_in_region(spectrum: Spectrum, region: Rectangle) -> int:
    """Eigenvalues with real and imaginary parts inside the rectangle, boundary inclusive."""
    return count_in_rect(spectrum.eigenvalues, region)


def count_in_rect(values: np.ndarray, region: Rectangle) -> int:
    re, im = values.real, values.imag
    inside = (re >= region.x0) & (re <= region.x1) & (im >= region.y0) & (im <= region.y1)
    return int(inside.sum())


def write_spectrum_csv(spectrum: Spectrum, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# n={spectrum.n},k={spectrum.k},seed={spectrum.source_seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "is_real"])
        for value in spectrum.eigenvalues:
            writer.writerow([repr(value.real), repr(value.imag), int(value.imag == 0.0)])


def read_spectrum_csv(path) -> Spectrum:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# "):
            raise ConfigurationError(f"missing spectrum header in {path}")
        meta = dict(part.split("=") for part in header[2:].split(","))
        rows = list(csv.DictReader(fh))
    values = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
    return _classify(values, int(meta["n"]), int(meta["seed"]))
