"""Two-phase Coulomb log-gas equivalent to the Gaussian iid eigenvalue measure at fixed k.

State: k particles on the real line plus m upper-half-plane representatives of
conjugate pairs, with k + 2m = n. The energy below is the negative log of the
closed-form joint eigenvalue density at fixed k (Lehmann-Sommers / Edelman
form), rescaled to entry variance 1/n so the bulk support is the unit disk:

    E = - sum_{i<i'} ln|l_i - l_i'|
        - 2 sum_{i,j} ln|l_i - z_j|
        - 2 sum_{j<j'} [ ln|z_j - z_j'| + ln|z_j - conj(z_j')| ]
        - sum_j ln(2 y_j)
        + (n/2) sum_i l_i^2
        + n sum_j (x_j^2 - y_j^2)
        - sum_j ln erfc(sqrt(2 n) y_j)

The Gibbs weight is exp(-E) at inverse temperature beta = 1. Moves displace a
single particle (Gaussian proposal, reflected at the real axis for pairs), so
k and m are invariant along a chain. Energy differences are computed
incrementally in O(n) per move, with periodic full recomputation and a
coherence check to bound drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy.special import log_ndtr

from .errors import ConfigurationError
from .rng import derive_seed, generator
from .spectra import Spectrum

LN2 = math.log(2.0)
FULL_RECOMPUTE_EVERY = 10_000
COHERENCE_CHECK_EVERY = 100  # 1% of steps
COHERENCE_RTOL = 1e-8


def ln_erfc(x) -> np.ndarray:
    """log(erfc(x)), stable for large positive arguments."""
    return LN2 + log_ndtr(-math.sqrt(2.0) * np.asarray(x, dtype=np.float64))


@dataclass
class GasState:
    """Positions of the two phases plus the cached energy."""

    reals: np.ndarray
    pairs: np.ndarray
    n: int
    energy: float = math.nan

    def __post_init__(self):
        self.reals = np.asarray(self.reals, dtype=np.float64)
        self.pairs = np.asarray(self.pairs, dtype=np.complex128)
        if len(self.reals) + 2 * len(self.pairs) != self.n:
            raise ConfigurationError(
                f"gas state has k={len(self.reals)}, m={len(self.pairs)} but n={self.n}"
            )
        if np.any(self.pairs.imag <= 0.0):
            raise ConfigurationError("pair representatives must have positive imaginary part")
        if math.isnan(self.energy):
            self.energy = gas_energy(self)

    @property
    def k(self) -> int:
        return len(self.reals)

    def copy(self) -> "GasState":
        return GasState(self.reals.copy(), self.pairs.copy(), self.n, self.energy)

    @classmethod
    def from_spectrum(cls, spectrum: Spectrum) -> "GasState":
        return cls(spectrum.real_values.copy(), spectrum.pair_representatives.copy(), spectrum.n)


def gas_energy(state: GasState) -> float:
    """Full energy; +inf when particles coincide (such moves are rejected)."""
    lam = state.reals
    z = state.pairs
    n = state.n
    energy = 0.0
    with np.errstate(divide="ignore"):
        if len(lam) > 1:
            diff = np.abs(lam[:, None] - lam[None, :])
            iu = np.triu_indices(len(lam), k=1)
            logs = np.log(diff[iu])
            if np.any(np.isneginf(logs)):
                return math.inf
            energy -= logs.sum()
        if len(lam) and len(z):
            cross = np.log(np.abs(lam[:, None] - z[None, :]))
            if np.any(np.isneginf(cross)):
                return math.inf
            energy -= 2.0 * cross.sum()
        if len(z) > 1:
            iu = np.triu_indices(len(z), k=1)
            direct = np.log(np.abs(z[:, None] - z[None, :])[iu])
            mirror = np.log(np.abs(z[:, None] - np.conj(z)[None, :])[iu])
            if np.any(np.isneginf(direct)) or np.any(np.isneginf(mirror)):
                return math.inf
            energy -= 2.0 * (direct.sum() + mirror.sum())
    y = z.imag
    x = z.real
    energy -= np.log(2.0 * y).sum()
    energy += 0.5 * n * np.square(lam).sum()
    energy += n * (np.square(x) - np.square(y)).sum()
    energy -= ln_erfc(math.sqrt(2.0 * n) * y).sum()
    return float(energy)


def _real_site_energy(a: float, lam: np.ndarray, skip: int, z: np.ndarray, n: int) -> float:
    """Terms of E involving a real particle at `a` (excluding index `skip`)."""
    with np.errstate(divide="ignore"):
        others = np.delete(lam, skip)
        e = 0.0
        if others.size:
            e -= np.log(np.abs(a - others)).sum()
        if z.size:
            e -= 2.0 * np.log(np.abs(a - z)).sum()
    e += 0.5 * n * a * a
    return float(e)


def _pair_site_energy(w: complex, lam: np.ndarray, z: np.ndarray, skip: int, n: int) -> float:
    """Terms of E involving a pair representative at `w` (excluding index `skip`)."""
    y = w.imag
    if y <= 0.0:
        return math.inf
    with np.errstate(divide="ignore"):
        e = 0.0
        if lam.size:
            e -= 2.0 * np.log(np.abs(lam - w)).sum()
        others = np.delete(z, skip)
        if others.size:
            e -= 2.0 * (
                np.log(np.abs(w - others)).sum() + np.log(np.abs(w - np.conj(others))).sum()
            )
        e -= math.log(2.0 * y)
    e += n * (w.real * w.real - y * y)
    e -= float(ln_erfc(math.sqrt(2.0 * n) * y))
    return float(e)


class GasChain:
    """Sequential Metropolis chain at fixed (n, k); snapshots are immutable copies."""

    def __init__(
        self,
        n: int,
        k: int,
        seed: int,
        proposal_scale: Optional[float] = None,
        beta: float = 1.0,
        initial: Optional[GasState] = None,
    ):
        if (n - k) % 2 != 0:
            raise ConfigurationError(f"k={k} must share the parity of n={n}")
        if not 0 <= k <= n:
            raise ConfigurationError(f"k={k} out of range for n={n}")
        self.n = n
        self.beta = beta
        self.rng = generator(seed)
        self.scale = proposal_scale if proposal_scale is not None else 0.7 / math.sqrt(n)
        if initial is not None:
            state = initial.copy()
        else:
            state = self._initial_state(k)
        self.reals = state.reals
        self.pairs = state.pairs
        self.energy = state.energy
        self.steps_done = 0
        self.accepted = 0

    def _initial_state(self, k: int) -> GasState:
        m = (self.n - k) // 2
        reals = np.sort(self.rng.uniform(-0.9, 0.9, k))
        x = self.rng.uniform(-0.9, 0.9, m)
        y = self.rng.uniform(0.1, 0.8, m)
        return GasState(reals, x + 1j * y, self.n)

    def state(self) -> GasState:
        return GasState(self.reals.copy(), self.pairs.copy(), self.n, self.energy)

    def step(self) -> bool:
        """One single-particle move; returns True if accepted."""
        k, m = len(self.reals), len(self.pairs)
        idx = int(self.rng.integers(k + m))
        if idx < k:
            old = self.reals[idx]
            new = old + self.scale * self.rng.standard_normal()
            e_old = _real_site_energy(old, self.reals, idx, self.pairs, self.n)
            e_new = _real_site_energy(new, self.reals, idx, self.pairs, self.n)
            delta = e_new - e_old
            accept = delta <= 0 or self.rng.random() < math.exp(-self.beta * delta)
            if accept and math.isfinite(delta):
                self.reals[idx] = new
                self.energy += delta
            else:
                accept = False
        else:
            j = idx - k
            old = complex(self.pairs[j])
            move = self.scale * complex(*self.rng.standard_normal(2))
            new = old + move
            if new.imag < 0.0:  # reflect at the real axis; proposal stays symmetric
                new = complex(new.real, -new.imag)
            e_old = _pair_site_energy(old, self.reals, self.pairs, j, self.n)
            e_new = _pair_site_energy(new, self.reals, self.pairs, j, self.n)
            delta = e_new - e_old
            accept = (
                math.isfinite(delta)
                and (delta <= 0 or self.rng.random() < math.exp(-self.beta * delta))
            )
            if accept:
                self.pairs[j] = new
                self.energy += delta
        self.steps_done += 1
        self.accepted += int(accept)
        if self.steps_done % FULL_RECOMPUTE_EVERY == 0:
            self.energy = gas_energy(self.state_view())
        elif self.steps_done % COHERENCE_CHECK_EVERY == 0:
            full = gas_energy(self.state_view())
            drift = abs(self.energy - full) / max(1.0, abs(full))
            if drift > COHERENCE_RTOL:
                raise AssertionError(f"energy cache drifted by {drift:.3e}")
            self.energy = full
        return accept

    def state_view(self) -> GasState:
        view = GasState.__new__(GasState)
        view.reals = self.reals
        view.pairs = self.pairs
        view.n = self.n
        view.energy = self.energy
        return view

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()

    def tune_scale(self, steps: int, target: float = 0.35, batch: int = 200) -> None:
        """Adapt the proposal scale toward a target acceptance rate (burn-in only)."""
        done = 0
        while done < steps:
            acc = sum(self.step() for _ in range(batch))
            rate = acc / batch
            if rate > target + 0.1:
                self.scale *= 1.15
            elif rate < target - 0.1:
                self.scale *= 0.85
            done += batch


def metropolis_step(
    state: GasState, beta: float, proposal_scale: float, rng: np.random.Generator
) -> GasState:
    """One Metropolis move on a copy of the state (k and m are invariant)."""
    if beta <= 0:
        raise ConfigurationError("beta must be positive")
    chain = GasChain.__new__(GasChain)
    chain.n = state.n
    chain.beta = beta
    chain.rng = rng
    chain.scale = proposal_scale
    chain.reals = state.reals.copy()
    chain.pairs = state.pairs.copy()
    chain.energy = state.energy
    chain.steps_done = 1  # skip the periodic-recompute bookkeeping
    chain.accepted = 0
    chain.step()
    return GasState(chain.reals, chain.pairs, state.n, chain.energy)


def sample_constrained_gas(
    n: int,
    k: int,
    steps: int,
    seed: int,
    burn_in: Optional[int] = None,
    thin: Optional[int] = None,
    proposal_scale: Optional[float] = None,
) -> List[GasState]:
    """Equilibrium snapshots of the fixed-k gas, thinned to near-decorrelation."""
    if burn_in is None:
        burn_in = 5000 * n
    if thin is None:
        thin = 10 * n
    if steps < burn_in:
        raise ConfigurationError(f"steps={steps} below burn_in={burn_in}")
    chain = GasChain(n, k, seed, proposal_scale=proposal_scale)
    tune_steps = max(2000, burn_in // 5)
    chain.tune_scale(tune_steps)
    chain.run(burn_in - min(tune_steps, burn_in))
    snapshots = []
    remaining = steps - burn_in
    for _ in range(remaining // thin):
        chain.run(thin)
        snapshots.append(chain.state())
    return snapshots


def energy_rows_from_states(k: int, energies: Sequence[float], source: str) -> dict:
    energies = np.asarray(energies, dtype=np.float64)
    stderr = energies.std(ddof=1) / math.sqrt(len(energies)) if len(energies) > 1 else math.nan
    return {
        "k": k,
        "mean_energy": float(energies.mean()),
        "stderr": float(stderr),
        "samples": len(energies),
        "source": source,
    }


def energy_vs_k(
    n: int,
    k_list: Sequence[int],
    samples: int,
    seed: int,
    source: str = "matrices",
    max_steps: int = 200_000,
) -> List[dict]:
    """Mean gas energy per k, from conditioned matrices or equilibrated gas states."""
    from . import raresampler  # local import to avoid a cycle
    from .ensembles import EnsembleSpec

    for k in k_list:
        if (n - k) % 2 != 0:
            raise ConfigurationError(f"k={k} must share the parity of n={n}")
    rows = []
    if source == "matrices":
        spec = EnsembleSpec("ginibre", n)
        for pos, k in enumerate(k_list):
            target = raresampler.RareTarget("real_count", k, max_steps=max_steps)
            batch = raresampler.conditioned_ensemble(
                spec, target, samples, derive_seed(seed, pos)
            )
            energies = [
                gas_energy(GasState.from_spectrum(r.spectrum())) for r in batch.results
            ]
            rows.append(energy_rows_from_states(k, energies, "matrices"))
    elif source == "gas":
        for pos, k in enumerate(k_list):
            thin = 10 * n
            burn = 5000 * n
            states = sample_constrained_gas(
                n, k, burn + samples * thin, derive_seed(seed, pos)
            )
            rows.append(energy_rows_from_states(k, [s.energy for s in states], "gas"))
    else:
        raise ConfigurationError(f"source: unknown energy source {source!r}")
    return rows


@dataclass
class GapProfile:
    y_centers: np.ndarray
    density: np.ndarray
    zeta: Optional[float]
    bulk_density: float
    states: int

    @property
    def undefined(self) -> bool:
        return self.zeta is None


def gap_profile(
    states_or_spectra: Iterable[Union[GasState, Spectrum]],
    y_grid: Sequence[float],
    re_window: float = 0.8,
) -> GapProfile:
    """Density of pair representatives vs distance to the real axis (|Re| <= window).

    zeta is the smallest grid height where the density reaches half the bulk
    plateau (estimated from the upper half of the grid); it is None when the
    stream carries no pairs at all.
    """
    y_grid = np.asarray(y_grid, dtype=np.float64)
    counts = np.zeros(y_grid.size - 1)
    states = 0
    total_pairs = 0
    for item in states_or_spectra:
        pairs = item.pairs if isinstance(item, GasState) else item.pair_representatives
        states += 1
        total_pairs += len(pairs)
        if len(pairs) == 0:
            continue
        sel = np.abs(pairs.real) <= re_window
        counts += np.histogram(pairs.imag[sel], bins=y_grid)[0]
    widths = np.diff(y_grid)
    density = counts / (max(states, 1) * widths * 2.0 * re_window)
    centers = 0.5 * (y_grid[:-1] + y_grid[1:])
    if total_pairs == 0:
        return GapProfile(centers, density, None, 0.0, states)
    upper = density[density.size // 2 :]
    bulk = float(upper.mean())
    zeta = None
    for c, d in zip(centers, density):
        if d >= 0.5 * bulk:
            zeta = float(c)
            break
    return GapProfile(centers, density, zeta, bulk, states)
