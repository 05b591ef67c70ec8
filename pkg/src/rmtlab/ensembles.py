"""Seed-driven generation of the random-matrix families under study.

Families and their normalization conventions (``scale_rule="paper"``):

* iid families (``ginibre``, ``uniform``, ``bernoulli``, ``pearson7``):
  entries are iid with mean 0 and standard deviation ``1/sqrt(n)``, so the
  spectral radius tends to 1.
* heavy-tailed families (``stable``, ``pareto_tail``): raw unit-scale
  deviates multiplied by ``n**(-1/alpha)``.
* non-identically distributed families (``i_matrix_1``, ``i_matrix_2``):
  ``D_L X D_R`` with ``X`` a Ginibre sample and random diagonal vectors
  ``L``, ``R`` with ``E[L_i R_j] = 1``; the heterogeneity parameter is
  ``theta = sqrt(Var L + Var R)``.
* correlated-transpose families (``elliptic``, ``almost_symmetric``):
  ``Cov(m_ij, m_ji) = tau/n`` for ``i != j``; ``almost_symmetric`` uses the
  size-dependent schedule ``tau = 1 - n**(-gamma)``.
* ``product``: product of ``l`` independent Ginibre samples.
* ``cauchy_pair``: two independent Ginibre samples forming a pencil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .rng import derive_seed, generator

IID_FAMILIES = ("ginibre", "uniform", "bernoulli", "pearson7")
HT_FAMILIES = ("stable", "pareto_tail")
I_FAMILIES = ("i_matrix_1", "i_matrix_2")
CORRELATED_FAMILIES = ("elliptic", "almost_symmetric")
FAMILIES = IID_FAMILIES + HT_FAMILIES + I_FAMILIES + CORRELATED_FAMILIES + (
    "product",
    "cauchy_pair",
)

# parameters each family requires beyond n (beta is optional for stable)
_REQUIRED = {
    "stable": ("alpha",),
    "pareto_tail": ("alpha",),
    "i_matrix_1": ("theta",),
    "i_matrix_2": ("theta",),
    "elliptic": ("tau",),
    "almost_symmetric": ("gamma",),
    "product": ("l",),
}
_ALLOWED = {
    "stable": ("alpha", "beta"),
    "pareto_tail": ("alpha",),
    "i_matrix_1": ("theta",),
    "i_matrix_2": ("theta",),
    "elliptic": ("tau",),
    "almost_symmetric": ("gamma",),
    "product": ("l",),
}
_PARAM_FIELDS = ("alpha", "beta", "theta", "tau", "gamma", "l")


@dataclass(frozen=True)
class EnsembleSpec:
    """Names a matrix family together with exactly its relevant parameters."""

    family: str
    n: int
    alpha: Optional[float] = None
    beta: Optional[float] = None
    theta: Optional[float] = None
    tau: Optional[float] = None
    gamma: Optional[float] = None
    l: Optional[int] = None
    scale_rule: str = "paper"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigurationError(f"family: unknown family {self.family!r}")
        if not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
            raise ConfigurationError(f"n: must be a positive integer, got {self.n!r}")
        if self.scale_rule != "paper":
            raise ConfigurationError(f"scale_rule: unknown rule {self.scale_rule!r}")
        allowed = _ALLOWED.get(self.family, ())
        for name in _PARAM_FIELDS:
            value = getattr(self, name)
            if value is None:
                continue
            if name not in allowed:
                raise ConfigurationError(
                    f"{name}: not a parameter of family {self.family!r}"
                )
        for name in _REQUIRED.get(self.family, ()):
            if getattr(self, name) is None:
                raise ConfigurationError(f"{name}: required by family {self.family!r}")
        if self.alpha is not None and not 0.0 < self.alpha < 2.0:
            raise ConfigurationError(f"alpha: must lie in (0, 2), got {self.alpha}")
        if self.beta is not None and self.beta not in (0.0, 1.0, 0, 1):
            raise ConfigurationError(f"beta: must be 0 or 1, got {self.beta}")
        if self.theta is not None and self.theta < 0:
            raise ConfigurationError(f"theta: must be nonnegative, got {self.theta}")
        if self.tau is not None and not -1.0 <= self.tau <= 1.0:
            raise ConfigurationError(f"tau: must lie in [-1, 1], got {self.tau}")
        if self.gamma is not None and self.gamma < 0:
            raise ConfigurationError(f"gamma: must be nonnegative, got {self.gamma}")
        if self.l is not None and not (isinstance(self.l, (int, np.integer)) and self.l >= 1):
            raise ConfigurationError(f"l: must be a positive integer, got {self.l!r}")

    def to_dict(self) -> dict:
        doc = {"family": self.family, "n": int(self.n), "scale_rule": self.scale_rule}
        for name in _PARAM_FIELDS:
            value = getattr(self, name)
            if value is not None:
                doc[name] = int(value) if name == "l" else float(value)
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "EnsembleSpec":
        known = {"family", "n", "scale_rule", *_PARAM_FIELDS}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown keys in ensemble document: {sorted(unknown)}")
        if "family" not in doc or "n" not in doc:
            raise ConfigurationError("ensemble document requires 'family' and 'n'")
        return cls(**doc)

    def label(self) -> str:
        parts = [self.family]
        for name in _PARAM_FIELDS:
            value = getattr(self, name)
            if value is not None:
                parts.append(f"{name}{value:g}" if name != "l" else f"l{value}")
        return "_".join(parts)

    def correlation_tau(self) -> float:
        """Transpose-pair correlation actually used at this size."""
        if self.family == "elliptic":
            return float(self.tau)
        if self.family == "almost_symmetric":
            return 1.0 - float(self.n) ** (-float(self.gamma))
        raise ConfigurationError(f"family {self.family!r} has no transpose correlation")


@dataclass
class MatrixSample:
    """One generated matrix plus everything needed to regenerate or perturb it."""

    entries: np.ndarray
    spec: EnsembleSpec
    seed: int
    companion: Optional[np.ndarray] = None
    # diagonal factors (L, R) for i-matrix samples; kept so single-entry
    # redraws can preserve the conditional law given the factors
    factors: Optional[tuple] = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def stable_deviate(alpha: float, beta: float, rng: np.random.Generator, size=None):
    """Alpha-stable deviates via the Chambers-Mallows-Stuck transform.

    Standard (S1) parameterization: ``alpha=2`` gives N(0, 2), ``alpha=1,
    beta=0`` gives the standard Cauchy.
    """
    if not 0.0 < alpha <= 2.0:
        raise ConfigurationError(f"alpha: must lie in (0, 2], got {alpha}")
    if not -1.0 <= beta <= 1.0:
        raise ConfigurationError(f"beta: must lie in [-1, 1], got {beta}")
    u = math.pi * (rng.random(size) - 0.5)
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        if beta == 0.0:
            return np.tan(u)
        half_pi = math.pi / 2.0
        return (2.0 / math.pi) * (
            (half_pi + beta * u) * np.tan(u)
            - beta * np.log(half_pi * w * np.cos(u) / (half_pi + beta * u))
        )
    theta0 = math.atan(beta * math.tan(math.pi * alpha / 2.0)) / alpha
    t1 = np.sin(alpha * (u + theta0)) / (math.cos(alpha * theta0) * np.cos(u)) ** (1.0 / alpha)
    t2 = (np.cos(alpha * theta0 + (alpha - 1.0) * u) / w) ** ((1.0 - alpha) / alpha)
    return t1 * t2


def pearson7_deviate(rng: np.random.Generator, size=None):
    """Unit-variance Pearson VII deviates with density 3*(2+x^2)**(-5/2).

    A Student-t with 4 degrees of freedom divided by sqrt(2) has exactly this
    density, so sampling is exact and rejection-free.
    """
    return rng.standard_t(4, size) / math.sqrt(2.0)


def pareto_tail_deviate(alpha: float, rng: np.random.Generator, size=None):
    """Symmetric deviates with density proportional to |x|**(-1-alpha) on |x|>=1."""
    magnitude = rng.random(size) ** (-1.0 / alpha)
    sign = rng.integers(0, 2, size) * 2 - 1
    return sign * magnitude


def entry_scale(spec: EnsembleSpec) -> float:
    """Multiplier applied to unit-scale deviates for iid and ht families."""
    if spec.family in IID_FAMILIES:
        return 1.0 / math.sqrt(spec.n)
    if spec.family in HT_FAMILIES:
        return float(spec.n) ** (-1.0 / spec.alpha)
    raise ConfigurationError(f"family {spec.family!r} has no scalar entry law")


def draw_raw_entries(spec: EnsembleSpec, rng: np.random.Generator, size=None):
    """Unit-scale entry deviates for iid and ht families (before entry_scale)."""
    family = spec.family
    if family == "ginibre":
        return rng.standard_normal(size)
    if family == "uniform":
        return (2.0 * rng.random(size) - 1.0) * math.sqrt(3.0)
    if family == "bernoulli":
        return (rng.integers(0, 2, size) * 2 - 1).astype(np.float64)
    if family == "pearson7":
        return pearson7_deviate(rng, size)
    if family == "stable":
        return stable_deviate(spec.alpha, spec.beta or 0.0, rng, size)
    if family == "pareto_tail":
        return pareto_tail_deviate(spec.alpha, rng, size)
    raise ConfigurationError(f"family {family!r} has no scalar entry law")


def _ginibre(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n)) / math.sqrt(n)


def _i_matrix_factors(spec: EnsembleSpec, rng: np.random.Generator):
    n, theta = spec.n, float(spec.theta)
    if spec.family == "i_matrix_1":
        left = np.ones(n)
        right = 1.0 + theta * rng.standard_normal(n)
    else:
        sd = theta / math.sqrt(2.0)
        left = 1.0 + sd * rng.standard_normal(n)
        right = 1.0 + sd * rng.standard_normal(n)
    return left, right


def _correlated_entries(n: int, tau: float, rng: np.random.Generator) -> np.ndarray:
    scale = 1.0 / math.sqrt(n)
    diag = rng.standard_normal(n)
    iu, ju = np.triu_indices(n, k=1)
    g1 = rng.standard_normal(iu.size)
    g2 = rng.standard_normal(iu.size)
    upper = g1
    lower = tau * g1 + math.sqrt(max(0.0, 1.0 - tau * tau)) * g2
    m = np.zeros((n, n))
    m[iu, ju] = upper
    m[ju, iu] = lower
    m[np.arange(n), np.arange(n)] = diag
    return m * scale


def generate(spec: EnsembleSpec, seed: int) -> MatrixSample:
    """One matrix sample; a pure function of (spec, seed)."""
    spec.validate()
    rng = generator(seed)
    n = spec.n
    family = spec.family

    if family in IID_FAMILIES or family in HT_FAMILIES:
        entries = draw_raw_entries(spec, rng, (n, n)) * entry_scale(spec)
        return MatrixSample(entries, spec, seed)
    if family in I_FAMILIES:
        left, right = _i_matrix_factors(spec, rng)
        x = _ginibre(n, rng)
        entries = left[:, None] * x * right[None, :]
        return MatrixSample(entries, spec, seed, factors=(left, right))
    if family in CORRELATED_FAMILIES:
        entries = _correlated_entries(n, spec.correlation_tau(), rng)
        return MatrixSample(entries, spec, seed)
    if family == "product":
        entries = _ginibre(n, rng)
        for _ in range(spec.l - 1):
            entries = entries @ _ginibre(n, rng)
        return MatrixSample(entries, spec, seed)
    if family == "cauchy_pair":
        a = _ginibre(n, rng)
        b = _ginibre(n, rng)
        return MatrixSample(a, spec, seed, companion=b)
    raise ConfigurationError(f"family: unhandled family {family!r}")


def complex_ginibre(n: int, seed: int) -> np.ndarray:
    """Complex Ginibre matrix built from two independent real Ginibre arrays.

    Entries are (X + iY)/sqrt(2) with X, Y real Ginibre, so E|m_ij|^2 = 1/n
    and the spectrum fills the unit disk.
    """
    rng = generator(seed)
    x = rng.standard_normal((n, n))
    y = rng.standard_normal((n, n))
    return (x + 1j * y) / math.sqrt(2.0 * n)
