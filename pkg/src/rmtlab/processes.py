"""Matrix-valued Wiener / Ornstein-Uhlenbeck processes and the count process k(t).

Entries evolve by Euler-Maruyama; eigenvalues are recomputed from scratch at
sampling times (k changes by colliding/lifting conjugate pairs, so its parity
is invariant and asserted at every sample). kappa(t) is emitted in two
normalizations: the plain (2-sqrt(2))*k_bar divisor and the k*-style square
root divisor used for Gaussianity tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import periodogram

from ._eig import fast_eigvals
from .errors import ConfigurationError
from .realstats import TWO_MINUS_SQRT2, ginibre_mean_k
from .rng import generator


@dataclass(frozen=True)
class ProcessConfig:
    kind: str  # "wiener" | "ou"
    n: int
    dt: float
    horizon: float
    normalize_entries: bool = True

    def __post_init__(self):
        if self.kind not in ("wiener", "ou"):
            raise ConfigurationError(f"kind: unknown process {self.kind!r}")
        if self.dt <= 0 or self.dt > self.horizon:
            raise ConfigurationError("dt must satisfy 0 < dt <= horizon")


def initial_matrix(config: ProcessConfig, seed: int) -> np.ndarray:
    """Canonical start: zeros for Wiener, a stationary draw for OU.

    The OU stationary entry variance is 1/(2*damping) = 1/2.
    """
    if config.kind == "wiener":
        return np.zeros((config.n, config.n))
    rng = generator(seed)
    return rng.standard_normal((config.n, config.n)) / math.sqrt(2.0)


def snapshot_scale(config: ProcessConfig, t: float) -> float:
    """Factor turning the state at time t into an entry-variance-1/n matrix."""
    if not config.normalize_entries:
        return 1.0
    if config.kind == "wiener":
        return 1.0 / math.sqrt(config.n * t) if t > 0 else 1.0
    return math.sqrt(2.0 / config.n)


def evolve(
    config: ProcessConfig, initial: Optional[np.ndarray], seed: int
) -> Iterator[Tuple[float, np.ndarray]]:
    """Euler-Maruyama trajectory, emitted at every step (views, do not mutate)."""
    rng = generator(seed)
    m = initial.copy() if initial is not None else initial_matrix(config, seed)
    if m.shape != (config.n, config.n):
        raise ConfigurationError("initial matrix dimension mismatch")
    sqrt_dt = math.sqrt(config.dt)
    steps = int(round(config.horizon / config.dt))
    t = 0.0
    for _ in range(steps):
        noise = rng.standard_normal((config.n, config.n))
        if config.kind == "ou":
            m += -m * config.dt + sqrt_dt * noise
        else:
            m += sqrt_dt * noise
        t += config.dt
        yield t, m


@dataclass
class KappaSeries:
    times: np.ndarray
    counts: np.ndarray
    kappa: np.ndarray       # (k - k_bar) / ((2 - sqrt 2) k_bar), as printed
    kappa_star: np.ndarray  # (k - k_bar) / sqrt((2 - sqrt 2) k_bar)
    k_bar: float


def kappa_process(
    trajectory: Iterator[Tuple[float, np.ndarray]],
    k_bar: float,
    n: int,
    eig_every: int = 10,
) -> KappaSeries:
    """Count process along a trajectory, sampled every `eig_every` Euler steps."""
    if k_bar <= 0:
        raise ConfigurationError("k_bar must be positive")
    times, counts = [], []
    for step, (t, m) in enumerate(trajectory, start=1):
        if step % eig_every:
            continue
        values = fast_eigvals(m)
        k = int(np.sum(values.imag == 0.0))
        assert (k - n) % 2 == 0, f"parity violated at t={t}: k={k}, n={n}"
        times.append(t)
        counts.append(k)
    times = np.asarray(times)
    counts = np.asarray(counts, dtype=np.float64)
    centered = counts - k_bar
    return KappaSeries(
        times=times,
        counts=counts.astype(np.int64),
        kappa=centered / (TWO_MINUS_SQRT2 * k_bar),
        kappa_star=centered / math.sqrt(TWO_MINUS_SQRT2 * k_bar),
        k_bar=k_bar,
    )


def run_kappa_trajectory(config: ProcessConfig, seed: int, eig_every: int = 10) -> KappaSeries:
    k_bar = ginibre_mean_k(config.n)
    return kappa_process(evolve(config, None, seed), k_bar, config.n, eig_every)


@dataclass
class AutocorrelationResult:
    lags: np.ndarray      # in time units
    c: np.ndarray
    c0: float
    tau_c: float
    fit_c0: float
    poor_fit: bool
    trajectories: int


def autocorrelation(
    kappa_rows: np.ndarray, dt_sample: float, max_lag: Optional[int] = None
) -> AutocorrelationResult:
    """Ensemble-averaged C(tau) = E[kappa(t) kappa(t+tau)] and its exponential fit.

    Stationarity is assumed (trajectories start in the stationary law), so the
    estimator averages over both time origins and trajectories.
    """
    rows = np.atleast_2d(np.asarray(kappa_rows, dtype=np.float64))
    n_traj, length = rows.shape
    if n_traj < 50:
        raise ConfigurationError("autocorrelation needs >= 50 trajectories")
    if max_lag is None:
        max_lag = length // 4
    c = np.zeros(max_lag + 1)
    for lag in range(max_lag + 1):
        prod = rows[:, : length - lag] * rows[:, lag:]
        c[lag] = prod.mean()
    lags = np.arange(max_lag + 1) * dt_sample

    def model(tau, c0, tau_c):
        return c0 * np.exp(-tau / tau_c)

    # fit out to where correlations are resolved; seed tau_c from the 1/e crossing
    below = np.nonzero(c < c[0] / math.e)[0]
    guess_tau = lags[below[0]] if below.size else lags[-1] / 2
    cutoff = np.nonzero(c < 0.02 * c[0])[0]
    hi = int(cutoff[0]) if cutoff.size else max_lag
    hi = max(hi, 3)
    try:
        popt, _ = curve_fit(
            model, lags[: hi + 1], c[: hi + 1], p0=(c[0], max(guess_tau, dt_sample))
        )
        fit_c0, tau_c = float(popt[0]), float(popt[1])
        residual = float(np.sqrt(np.mean((model(lags[: hi + 1], *popt) - c[: hi + 1]) ** 2)))
        poor = residual > 0.2 * c[0]
    except RuntimeError:
        fit_c0, tau_c, poor = float(c[0]), math.nan, True
    return AutocorrelationResult(lags, c, float(c[0]), tau_c, fit_c0, poor, n_traj)


def power_spectrum(kappa_rows: np.ndarray, dt_sample: float):
    """Trajectory-averaged periodogram of kappa(t)."""
    rows = np.atleast_2d(np.asarray(kappa_rows, dtype=np.float64))
    freqs = None
    accum = None
    for row in rows:
        f, p = periodogram(row, fs=1.0 / dt_sample)
        accum = p if accum is None else accum + p
        freqs = f
    return freqs, accum / rows.shape[0]
