"""Conditioning matrices on rare objective values by greedy single-entry redraws.

One chain step redraws a uniformly chosen entry from its family's marginal
law and keeps the change iff the objective moved closer to (or stayed at the
same distance from) the target. The equal-distance acceptances are the
lateral moves that let the chain diffuse instead of deadlocking; there is no
annealing schedule. Every step recomputes the full spectrum, which is the
dominant cost.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np

from . import ensembles
from ._eig import fast_eigvals
from .ensembles import EnsembleSpec, MatrixSample, draw_raw_entries, entry_scale
from .errors import ConditioningTimeout, ConfigurationError
from .rng import derive_seed, generator
from .spectra import Rectangle, Spectrum, _classify, count_in_rect

logger = logging.getLogger(__name__)

CONDITIONABLE = ensembles.IID_FAMILIES + ensembles.HT_FAMILIES + ensembles.I_FAMILIES + ensembles.CORRELATED_FAMILIES


@dataclass(frozen=True)
class RareTarget:
    """What to condition on: an exact real-eigenvalue count or a region count."""

    objective: str  # "real_count" | "region_count"
    target: int
    region: Optional[Rectangle] = None
    max_steps: int = 200_000
    record_trajectory: bool = False
    burn_in_steps: int = 0  # constant-objective relaxation after the target is hit

    def __post_init__(self):
        if self.objective not in ("real_count", "region_count"):
            raise ConfigurationError(f"objective: unknown objective {self.objective!r}")
        if self.objective == "region_count" and self.region is None:
            raise ConfigurationError("region: required for region_count targets")
        if self.target < 0:
            raise ConfigurationError(f"target: must be nonnegative, got {self.target}")


@dataclass
class ConditionResult:
    sample: Optional[MatrixSample]
    steps_used: int
    eigenvalues: np.ndarray
    trajectory: Optional[list] = None
    seed: int = 0

    def spectrum(self) -> Spectrum:
        """Classified spectrum of the conditioned matrix (real samples only)."""
        return _classify(self.eigenvalues, len(self.eigenvalues), self.seed)


def _real_count_objective(matrix: np.ndarray):
    values = fast_eigvals(matrix)
    return values, int(np.sum(values.imag == 0.0))


def _region_objective(region: Rectangle):
    def objective(matrix: np.ndarray):
        values = fast_eigvals(matrix)
        return values, count_in_rect(values, region)

    return objective


def make_redraw(spec: EnsembleSpec, factors=None) -> Callable:
    """Single-entry redraw kernel preserving the family's entry law."""
    family = spec.family
    n = spec.n
    if family in ensembles.IID_FAMILIES or family in ensembles.HT_FAMILIES:
        scale = entry_scale(spec)

        def redraw(m, rng):
            i, j = rng.integers(n), rng.integers(n)
            old = m[i, j]
            m[i, j] = draw_raw_entries(spec, rng) * scale
            return ((i, j, old),)

        return redraw
    if family in ensembles.I_FAMILIES:
        if factors is None:
            raise ConfigurationError("i-matrix samples need their (L, R) factors for redraws")
        left, right = factors
        sigma = 1.0 / math.sqrt(n)

        def redraw(m, rng):
            i, j = rng.integers(n), rng.integers(n)
            old = m[i, j]
            m[i, j] = left[i] * (sigma * rng.standard_normal()) * right[j]
            return ((i, j, old),)

        return redraw
    if family in ensembles.CORRELATED_FAMILIES:
        # transposed entries are correlated, so both members of the pair are
        # redrawn jointly; a lone redraw would silently destroy tau
        tau = spec.correlation_tau()
        rho = math.sqrt(max(0.0, 1.0 - tau * tau))
        sigma = 1.0 / math.sqrt(n)

        def redraw(m, rng):
            i, j = rng.integers(n), rng.integers(n)
            if i == j:
                old = m[i, i]
                m[i, i] = sigma * rng.standard_normal()
                return ((i, i, old),)
            g1, g2 = rng.standard_normal(2)
            old_ij, old_ji = m[i, j], m[j, i]
            m[i, j] = sigma * g1
            m[j, i] = sigma * (tau * g1 + rho * g2)
            return ((i, j, old_ij), (j, i, old_ji))

        return redraw
    raise ConfigurationError(
        f"family: {family!r} cannot be conditioned by entry perturbation"
    )


def complex_redraw(n: int) -> Callable:
    """Redraw kernel for complex Ginibre samples (region conditioning)."""
    sigma = 1.0 / math.sqrt(2.0 * n)

    def redraw(m, rng):
        i, j = rng.integers(n), rng.integers(n)
        old = m[i, j]
        m[i, j] = sigma * complex(rng.standard_normal(), rng.standard_normal())
        return ((i, j, old),)

    return redraw


def greedy_chain(
    matrix: np.ndarray,
    objective_fn: Callable,
    redraw_fn: Callable,
    target: int,
    rng: np.random.Generator,
    max_steps: int,
    record_trajectory: bool = False,
    burn_in_steps: int = 0,
):
    """Run one greedy chain in place; returns (eigenvalues, steps, trajectory)."""
    values, current = objective_fn(matrix)
    distance = abs(current - target)
    trajectory = [] if record_trajectory else None
    steps = 0
    while current != target:
        if steps >= max_steps:
            raise ConditioningTimeout(
                f"target {target} not reached in {max_steps} steps (at {current})",
                best_matrix=matrix,
                best_value=current,
                steps=steps,
            )
        revert = redraw_fn(matrix, rng)
        new_values, proposed = objective_fn(matrix)
        steps += 1
        if abs(proposed - target) <= distance:
            values, current, distance = new_values, proposed, abs(proposed - target)
            accepted = True
        else:
            for i, j, old in revert:
                matrix[i, j] = old
            accepted = False
        if trajectory is not None:
            trajectory.append((steps, current, accepted))
    for _ in range(burn_in_steps):
        revert = redraw_fn(matrix, rng)
        new_values, proposed = objective_fn(matrix)
        steps += 1
        if proposed == target:
            values = new_values
            accepted = True
        else:
            for i, j, old in revert:
                matrix[i, j] = old
            accepted = False
        if trajectory is not None:
            trajectory.append((steps, target, accepted))
    return values, steps, trajectory


def condition(sample: MatrixSample, target: RareTarget, seed: int) -> ConditionResult:
    """Perturb the sample until its objective equals the target exactly."""
    spec = sample.spec
    if spec.family not in CONDITIONABLE:
        raise ConfigurationError(
            f"family: {spec.family!r} cannot be conditioned (derived spectrum)"
        )
    if target.objective == "real_count":
        if (target.target - sample.n) % 2 != 0:
            raise ConfigurationError(
                f"target: k*={target.target} has wrong parity for n={sample.n}"
            )
        if target.target > sample.n:
            raise ConfigurationError(f"target: k*={target.target} exceeds n={sample.n}")
        objective_fn = _real_count_objective
    else:
        objective_fn = _region_objective(target.region)
    matrix = sample.entries.copy()
    redraw_fn = make_redraw(spec, sample.factors)
    rng = generator(seed)
    values, steps, trajectory = greedy_chain(
        matrix,
        objective_fn,
        redraw_fn,
        target.target,
        rng,
        target.max_steps,
        record_trajectory=target.record_trajectory,
        burn_in_steps=target.burn_in_steps,
    )
    out = MatrixSample(matrix, spec, sample.seed, factors=sample.factors)
    return ConditionResult(out, steps, values, trajectory, seed=sample.seed)


@dataclass
class ConditionedBatch:
    """Successful chains of a batch run plus its bookkeeping."""

    results: list
    attempts: int
    failures: int

    @property
    def success_ratio(self) -> float:
        return (self.attempts - self.failures) / self.attempts if self.attempts else 0.0


def ensemble_seeds(master_seed: int, index: int):
    """(sample_seed, chain_seed) for realization `index`; shared by all paths."""
    return derive_seed(master_seed, 2 * index), derive_seed(master_seed, 2 * index + 1)


def conditioned_ensemble(
    spec: EnsembleSpec,
    target: RareTarget,
    count: int,
    master_seed: int,
    keep_matrices: bool = False,
) -> ConditionedBatch:
    """Condition `count` independent fresh starts; failures are skipped and logged."""
    if count < 1:
        raise ConfigurationError(f"count: must be >= 1, got {count}")
    results = []
    failures = 0
    for index in range(count):
        sample_seed, chain_seed = ensemble_seeds(master_seed, index)
        sample = ensembles.generate(spec, sample_seed)
        try:
            result = condition(sample, target, chain_seed)
        except ConditioningTimeout as exc:
            failures += 1
            logger.warning("chain %d timed out at objective %s", index, exc.best_value)
            continue
        if not keep_matrices:
            result.sample = None
        results.append(result)
    batch = ConditionedBatch(results, count, failures)
    if batch.success_ratio < 0.5:
        logger.warning(
            "conditioned ensemble success ratio %.2f below 50%%", batch.success_ratio
        )
    return batch


def write_trajectory_csv(trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "k", "accepted"])
        for step, k, accepted in trajectory:
            writer.writerow([step, k, int(accepted)])
