"""Conditioning complex spectra on rectangle counts: the aspect-ratio experiment.

Rectangles share a fixed area (hence a fixed unconstrained expected count of
n*area/pi under the circular law) while the ratio of long to short side
varies. Conditioned eigenvalues inside the rectangle are histogrammed along
the long axis, rescaled to [-1/2, 1/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._eig import fast_eigvals
from .ensembles import complex_ginibre
from .errors import ConditioningTimeout, ConfigurationError
from .raresampler import complex_redraw, greedy_chain, _region_objective
from .rng import derive_seed, generator
from .spectra import Rectangle, count_in_rect
from .spectralmeasures import Histogram1D, HistogramAccumulator

DEFAULT_BINS = 13


def rectangle_for_ratio(area: float, ratio: float, center=(0.0, 0.0)) -> Rectangle:
    """Axis-aligned rectangle of the given area with long side L = ratio * l along x."""
    if ratio < 1.0:
        raise ConfigurationError("aspect ratio must be >= 1 (long side along x)")
    long_side = math.sqrt(area * ratio)
    short_side = math.sqrt(area / ratio)
    cx, cy = center
    return Rectangle(
        cx - long_side / 2.0, cx + long_side / 2.0,
        cy - short_side / 2.0, cy + short_side / 2.0,
    )


@dataclass
class RatioResult:
    ratio: float
    rectangle: Rectangle
    histogram: Histogram1D
    attempts: int
    successes: int
    mean_steps: float
    positions: np.ndarray  # pooled rescaled long-axis positions

    @property
    def success_ratio(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


@dataclass
class RectangleExperimentResult:
    per_ratio: List[RatioResult]
    control_mean_count: float
    expected_mean_count: float


def chain_seeds(master_seed: int, ratio_pos: int, index: int):
    """Seed pair for one conditioned realization; shared by all execution paths."""
    return (
        derive_seed(master_seed, 1000 * ratio_pos + 2 * index),
        derive_seed(master_seed, 1000 * ratio_pos + 2 * index + 1),
    )


def condition_rectangle(
    n: int,
    rect: Rectangle,
    target: int,
    sample_seed: int,
    chain_seed: int,
    max_steps: int,
):
    """One conditioned complex sample; returns eigenvalues inside the rectangle."""
    matrix = complex_ginibre(n, sample_seed)
    objective = _region_objective(rect)
    redraw = complex_redraw(n)
    rng = generator(chain_seed)
    values, steps, _ = greedy_chain(matrix, objective, redraw, target, rng, max_steps)
    inside = values[
        (values.real >= rect.x0)
        & (values.real <= rect.x1)
        & (values.imag >= rect.y0)
        & (values.imag <= rect.y1)
    ]
    return inside, steps


def rectangle_experiment(
    n: int,
    area: float,
    aspect_ratios: Sequence[float],
    target_count: int,
    samples: int,
    seed: int,
    bins: int = DEFAULT_BINS,
    max_steps: int = 30_000,
    center=(0.0, 0.0),
    control_samples: int = 100,
) -> RectangleExperimentResult:
    """Distribution along the long axis for each aspect ratio at fixed area."""
    per_ratio = []
    for pos, ratio in enumerate(aspect_ratios):
        rect = rectangle_for_ratio(area, ratio, center)
        assert abs(rect.area - area) < 1e-12 * max(1.0, area)
        acc = HistogramAccumulator(np.linspace(-0.5, 0.5, bins + 1))
        positions = []
        successes = 0
        steps_total = 0
        for index in range(samples):
            sample_seed, chain_seed = chain_seeds(seed, pos, index)
            try:
                inside, steps = condition_rectangle(
                    n, rect, target_count, sample_seed, chain_seed, max_steps
                )
            except ConditioningTimeout:
                continue
            successes += 1
            steps_total += steps
            u = (inside.real - center[0]) / (rect.x1 - rect.x0)
            positions.append(u)
            acc.add(u)
        pooled = np.concatenate(positions) if positions else np.array([])
        hist = acc.finalize("probability", meta={"ratio": ratio, "n": n, "target": target_count})
        per_ratio.append(
            RatioResult(
                ratio=ratio,
                rectangle=rect,
                histogram=hist,
                attempts=samples,
                successes=successes,
                mean_steps=steps_total / successes if successes else math.nan,
                positions=pooled,
            )
        )
    control_rect = rectangle_for_ratio(area, aspect_ratios[0], center)
    counts = []
    for index in range(control_samples):
        matrix = complex_ginibre(n, derive_seed(seed, 10_000_000 + index))
        counts.append(count_in_rect(fast_eigvals(matrix), control_rect))
    return RectangleExperimentResult(
        per_ratio=per_ratio,
        control_mean_count=float(np.mean(counts)),
        expected_mean_count=n * area / math.pi,
    )


def peak_position(hist: Histogram1D) -> float:
    """|position| of the density peak, averaged over the two half-axes."""
    centers = hist.centers
    d = hist.density()
    pos = centers > 0
    neg = centers < 0
    peak_pos = centers[pos][np.argmax(d[pos])] if pos.any() else math.nan
    peak_neg = centers[neg][np.argmax(d[neg])] if neg.any() else math.nan
    return float(0.5 * (abs(peak_pos) + abs(peak_neg)))
