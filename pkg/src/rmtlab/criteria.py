"""Canonical campaign configurations and the acceptance checks run against them.

Both the acceptance test suite and `rmt reproduce` evaluate figures through
these functions, so a figure reproduction and the test suite share cached
campaign outputs byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from .ensembles import EnsembleSpec
from .harness import ExperimentConfig
from .realstats import TWO_MINUS_SQRT2, ginibre_mean_k

MASTER_SEED = 20260810

GAUSSIANITY_FAMILIES = (
    EnsembleSpec("ginibre", 200),
    EnsembleSpec("uniform", 200),
    EnsembleSpec("bernoulli", 200),
    EnsembleSpec("pearson7", 200),
    EnsembleSpec("stable", 200, alpha=1.0, beta=0.0),
    EnsembleSpec("i_matrix_1", 200, theta=0.3),
)

ALMOST_SYMMETRIC_GAMMAS = (0.0, 0.5, 1.0, 1.5)
ALMOST_SYMMETRIC_SIZES = (100, 200, 400, 800)


def mean_k_formula(n: int) -> float:
    return math.sqrt(2.0 * n / math.pi) + 0.5


# ---------------------------------------------------------------------------
# canonical configs (cache identity: do not edit casually)
# ---------------------------------------------------------------------------


def config_count_stats(n: int) -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("ginibre", n),
        samples=10_000,
        master_seed=MASTER_SEED + n,
    )


def config_gaussianity(spec: EnsembleSpec, index: int) -> ExperimentConfig:
    return ExperimentConfig(
        "gaussianity", spec, samples=5000, master_seed=MASTER_SEED + 300 + index
    )


def config_interval_clt() -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("ginibre", 1000),
        samples=2000,
        master_seed=MASTER_SEED + 4,
        params={
            "intervals": [[-0.5, 0.5], [-0.8, -0.3], [0.3, 0.8]],
            "brownian_grid": [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0],
        },
    )


def config_mu_r_diluted() -> ExperimentConfig:
    """The long job: 1000 conditioned realizations at k = 2, n = 200."""
    return ExperimentConfig(
        "mu_r_transition",
        EnsembleSpec("ginibre", 200),
        master_seed=MASTER_SEED + 5,
        params={
            "k_list": [2],
            "realizations": 1000,
            "bins": 22,
            "half_width": 1.1,
            "max_steps": 200_000,
            "shard_block": 25,
            "x_ref": 0.8,
            "b_halo": 1,
        },
    )


def config_mu_r_central() -> ExperimentConfig:
    return ExperimentConfig(
        "mu_r_transition",
        EnsembleSpec("ginibre", 200),
        master_seed=MASTER_SEED + 55,
        params={
            "k_list": [12],
            "realizations": 400,
            "bins": 22,
            "half_width": 1.1,
            "max_steps": 200_000,
            "shard_block": 25,
            "x_ref": 0.8,
            "b_halo": 1,
        },
    )


def config_gas_saturated() -> ExperimentConfig:
    return ExperimentConfig(
        "gas",
        master_seed=MASTER_SEED + 555,
        params={
            "n": 200,
            "k": 100,
            "snapshots": 400,
            "chains": 2,
            "burn_in": 1_000_000,
            "thin": 2000,
            "bins": 32,
            "half_width": 1.6,
            "x_ref": 0.8,
            "b_halo": 1,
        },
    )


def config_ht_transition() -> ExperimentConfig:
    return ExperimentConfig(
        "mu_r_transition",
        EnsembleSpec("stable", 200, alpha=1.0, beta=0.0),
        master_seed=MASTER_SEED + 6,
        params={
            "k_list": [6, 16, 32],
            "realizations": 120,
            "bins": 50,
            "half_width": 5.0,
            "max_steps": 200_000,
            "shard_block": 6,
            "x_ref": 0.8,
            "b_halo": 2,
            "k_bar_ref": 16.8,
        },
    )


def config_spacings_ginibre() -> ExperimentConfig:
    return ExperimentConfig(
        "spacings",
        EnsembleSpec("ginibre", 200),
        samples=5000,
        master_seed=MASTER_SEED + 7,
    )


def config_energy_grid() -> ExperimentConfig:
    # grid {parity-min, k_bar/2, k_bar, 2 k_bar, 4 k_bar} at n = 100 (k_bar ~ 8.5)
    return ExperimentConfig(
        "energy_vs_k",
        master_seed=MASTER_SEED + 8,
        params={
            "n": 100,
            "k_list": [0, 4, 8, 16, 34],
            "samples": 40,
            "source": "matrices",
            "max_steps": 200_000,
            "shard_block": 5,
        },
    )


def config_energy_grid_gas() -> ExperimentConfig:
    return ExperimentConfig(
        "energy_vs_k",
        master_seed=MASTER_SEED + 88,
        params={
            "n": 100,
            "k_list": [0, 4, 8, 16, 34],
            "samples": 40,
            "source": "gas",
        },
    )


def config_elliptic() -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("elliptic", 500, tau=0.5),
        samples=600,
        master_seed=MASTER_SEED + 9,
    )


def config_cauchy() -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("cauchy_pair", 500),
        samples=400,
        master_seed=MASTER_SEED + 99,
        params={
            "collect_mu_r": {"bins": 50, "half_width": 5.0},
            "mu_r_reference": "cauchy",
        },
    )


def config_almost_symmetric(gamma: float, n: int) -> ExperimentConfig:
    index = ALMOST_SYMMETRIC_GAMMAS.index(gamma) * 10 + ALMOST_SYMMETRIC_SIZES.index(n)
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("almost_symmetric", n, gamma=gamma),
        samples=200,
        master_seed=MASTER_SEED + 1000 + index,
    )


def config_almost_symmetric_ratio() -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("almost_symmetric", 1000, gamma=0.5),
        samples=2000,
        master_seed=MASTER_SEED + 1010,
    )


def config_product_single() -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("product", 50, l=1),
        samples=10_000,
        master_seed=MASTER_SEED + 11,
    )


def config_product_deep() -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("product", 50, l=50),
        samples=1000,
        master_seed=MASTER_SEED + 111,
    )


def config_product_sqrt(n: int) -> ExperimentConfig:
    return ExperimentConfig(
        "count_stats",
        EnsembleSpec("product", n, l=int(math.ceil(math.sqrt(n)))),
        samples=1000,
        master_seed=MASTER_SEED + 112 + n,
    )


def config_process(n: int, kind: str = "ou", trajectories: int = 100) -> ExperimentConfig:
    # sampling step scales as 1/n so rescaled-time grids align across sizes
    return ExperimentConfig(
        "process",
        master_seed=MASTER_SEED + 12 + n + (0 if kind == "ou" else 7),
        params={
            "kind": kind,
            "n": n,
            "trajectories": trajectories,
            "dt": 0.02 / n,
            "horizon": 40.0 / n,
            "eig_every": 1,
            "shard_block": 10,
        },
    )


def config_rectangles() -> ExperimentConfig:
    return ExperimentConfig(
        "rectangles",
        master_seed=MASTER_SEED + 13,
        params={
            "n": 500,
            "area": 0.04,
            "ratios": [1.0, 8.0, 16.0],
            "target": 2,
            "samples": 20,
            "bins": 13,
            "max_steps": 30_000,
            "shard_block": 4,
            "control_samples": 100,
            "x_ref": 0.4,
        },
    )


def config_esd(spec: EnsembleSpec, index: int, samples: int = 200) -> ExperimentConfig:
    return ExperimentConfig(
        "esd", spec, samples=samples, master_seed=MASTER_SEED + 14 + index
    )


# ---------------------------------------------------------------------------
# criterion evaluation
# ---------------------------------------------------------------------------


@dataclass
class CriterionResult:
    criterion: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.criterion:2d} ({self.name}): {self.detail}"


def check_mean_count_law(records: Dict[int, dict]) -> CriterionResult:
    parts = []
    ok = True
    for n, extra in sorted(records.items()):
        expected = mean_k_formula(n)
        gap = abs(extra["mean_k"] - expected)
        bound = 3.0 * extra["stderr_mean"]
        ok &= gap <= bound
        parts.append(f"n={n}: |{extra['mean_k']:.3f}-{expected:.3f}|={gap:.3f} vs 3se={bound:.3f}")
    return CriterionResult(1, "mean count law", ok, "; ".join(parts))


def check_variance_ratio(extra: dict) -> CriterionResult:
    ratio = extra["var_over_mean"]
    ok = abs(ratio - TWO_MINUS_SQRT2) <= 0.05
    return CriterionResult(
        2, "variance ratio", ok, f"var/mean={ratio:.4f} vs {TWO_MINUS_SQRT2:.4f}+-0.05"
    )


def check_gaussianity(extras: Dict[str, dict]) -> CriterionResult:
    parts = []
    ok = True
    for label, extra in extras.items():
        p = extra["ks_pvalue"]
        ratio = extra["var_over_mean"]
        this = p is not None and p > 0.01 and abs(ratio - TWO_MINUS_SQRT2) <= 0.08
        ok &= this
        parts.append(f"{label}: p={p:.3g} ratio={ratio:.3f}")
    return CriterionResult(3, "Gaussianity across families", ok, "; ".join(parts))


def check_interval_clt(extra: dict) -> CriterionResult:
    mean = extra["interval_means"][0]
    expected = math.sqrt(1000 / (2 * math.pi))
    corr = extra["interval_correlation"]
    ok = abs(mean - expected) <= 0.03 * expected and abs(corr) < 0.1
    return CriterionResult(
        4,
        "interval CLT",
        ok,
        f"mean={mean:.3f} vs {expected:.3f}+-3%, corr={corr:.3f}",
    )


def check_mu_r_transition(diluted: dict, central: dict, gas: dict) -> CriterionResult:
    d = diluted["per_k"]["2"]
    c = central["per_k"]["12"]
    ok = (
        d["l1_inverse_semicircle"] < 0.15
        and d["B"] > 1.2
        and 0.8 <= c["B"] <= 1.25
        and gas["B"] < 0.8
    )
    detail = (
        f"k=2: L1={d['l1_inverse_semicircle']:.3f} B={d['B']:.2f}; "
        f"k=12: B={c['B']:.2f}; gas k=100: B={gas['B']:.2f}"
    )
    return CriterionResult(5, "mu_R transition", ok, detail)


def check_ht_no_transition(extra: dict) -> CriterionResult:
    bs = [info["B"] for info in extra["per_k"].values()]
    spread = (max(bs) - min(bs)) / np.mean(bs)
    ok = spread < 0.15
    return CriterionResult(
        6, "heavy-tail non-transition", ok,
        f"B values {['%.3f' % b for b in bs]}, spread={spread:.3f} (<0.15)",
    )


def check_spacings(matrix_extra: dict, gas_extra: dict) -> CriterionResult:
    ok = (
        matrix_extra["l1_semi_poisson"] < matrix_extra["l1_wigner"]
        and gas_extra["l1_wigner"] < gas_extra["l1_semi_poisson"]
    )
    detail = (
        f"unconditioned: L1(sP)={matrix_extra['l1_semi_poisson']:.3f} < L1(W)={matrix_extra['l1_wigner']:.3f}; "
        f"gas: L1(W)={gas_extra['l1_wigner']:.3f} < L1(sP)={gas_extra['l1_semi_poisson']:.3f}"
    )
    return CriterionResult(7, "spacing statistics", ok, detail)


def check_energy_minimum(extra: dict, k_bar_cell: int = 8) -> CriterionResult:
    per_k = {int(k): v for k, v in extra["per_k"].items()}
    means = {k: v["mean_energy"] for k, v in per_k.items()}
    errs = {k: v["stderr"] for k, v in per_k.items()}
    k_min = min(means, key=means.get)
    ok = k_min == k_bar_cell
    for k in per_k:
        if k == k_bar_cell:
            continue
        sep = means[k] - means[k_bar_cell]
        ok &= sep > 2.0 * math.hypot(errs[k], errs[k_bar_cell])
    detail = ", ".join(f"E({k})={means[k]:.1f}+-{errs[k]:.1f}" for k in sorted(means))
    return CriterionResult(8, "energy minimum at k_bar", ok, f"argmin={k_min}; {detail}")


def check_elliptic_cauchy(elliptic: dict, cauchy: dict) -> CriterionResult:
    ell = elliptic["mean_k"] / math.sqrt(500)
    ell_expected = 1.5 * math.sqrt(2 / math.pi)
    cau = cauchy["mean_k"]
    cau_expected = math.sqrt(math.pi * 500 / 2)
    l1 = cauchy["mu_r_l1_cauchy"]
    ok = (
        abs(ell - ell_expected) <= 0.05 * ell_expected
        and abs(cau - cau_expected) <= 0.05 * cau_expected
        and l1 < 0.1
    )
    detail = (
        f"elliptic mean/sqrt(n)={ell:.3f} vs {ell_expected:.3f}; "
        f"cauchy mean={cau:.2f} vs {cau_expected:.2f}; mu_R L1={l1:.3f}"
    )
    return CriterionResult(9, "elliptic and Cauchy laws", ok, detail)


def fit_power_law(sizes, means):
    coeffs = np.polyfit(np.log(sizes), np.log(means), 1)
    return float(coeffs[0]), float(math.exp(coeffs[1]))


def check_almost_symmetric(mean_table: Dict[float, Dict[int, float]], ratio_extra: dict) -> CriterionResult:
    bs = {}
    for gamma, by_n in mean_table.items():
        sizes = sorted(by_n)
        b, _ = fit_power_law(sizes, [by_n[n] for n in sizes])
        bs[gamma] = b
    ordered = [bs[g] for g in sorted(bs)]
    monotone = all(b2 >= b1 - 0.02 for b1, b2 in zip(ordered, ordered[1:]))
    bounded = all(b <= 1.01 for b in ordered)
    ratio = ratio_extra["var_over_mean"]
    ratio_ok = abs(ratio - TWO_MINUS_SQRT2) <= 0.05
    ok = monotone and bounded and ratio_ok
    detail = (
        "b(gamma)=" + ", ".join(f"{g}:{bs[g]:.3f}" for g in sorted(bs))
        + f"; ratio(n=1000)={ratio:.3f}"
    )
    return CriterionResult(10, "almost-symmetric scaling", ok, detail)


def check_products(single: dict, deep: dict) -> CriterionResult:
    expected = mean_k_formula(50)
    gap = abs(single["mean_k"] - expected)
    bound = 3.0 * single["stderr_mean"]
    deep_ok = deep["mean_k"] >= 0.9 * 50
    ok = gap <= bound and deep_ok
    detail = (
        f"l=1: mean={single['mean_k']:.3f} vs {expected:.3f} (3se={bound:.3f}); "
        f"l=n: mean={deep['mean_k']:.2f} >= 45"
    )
    return CriterionResult(11, "products of matrices", ok, detail)


def collapse_gap(curves: Dict[int, tuple]) -> float:
    """Max pairwise sup-distance between C(tau*n)/C(0) curves on a common grid."""
    rescaled = {}
    for n, (lags, c) in curves.items():
        x = np.asarray(lags) * n
        y = np.asarray(c) / c[0]
        rescaled[n] = (x, y)
    grid = np.linspace(0.0, min(x.max() for x, _ in rescaled.values()), 60)
    interped = {n: np.interp(grid, x, y) for n, (x, y) in rescaled.items()}
    worst = 0.0
    sizes = sorted(interped)
    for i, a in enumerate(sizes):
        for b in sizes[i + 1 :]:
            worst = max(worst, float(np.max(np.abs(interped[a] - interped[b]))))
    return worst


def check_processes(extras: Dict[int, dict], curves: Dict[int, tuple]) -> CriterionResult:
    taus = {n: extras[n]["tau_c"] for n in extras}
    pair_ok = True
    parts = []
    sizes = sorted(taus)
    for i, a in enumerate(sizes):
        for b in sizes[i + 1 :]:
            expected = b / a
            actual = taus[a] / taus[b]
            good = abs(actual - expected) <= 0.4 * expected
            pair_ok &= good
            parts.append(f"tau({a})/tau({b})={actual:.2f} vs {expected:.1f}")
    gap = collapse_gap(curves)
    ks_ok = all(extras[n]["ks_pvalue"] is not None and extras[n]["ks_pvalue"] > 0.01 for n in extras)
    ok = pair_ok and gap < 0.15 and ks_ok
    detail = "; ".join(parts) + f"; collapse gap={gap:.3f}; KS p=" + ",".join(
        f"{extras[n]['ks_pvalue']:.3g}" for n in sizes
    )
    return CriterionResult(12, "count process dynamics", ok, detail)


def config_extremal_unconditioned() -> ExperimentConfig:
    return ExperimentConfig(
        "extremal",
        EnsembleSpec("ginibre", 200),
        samples=2000,
        master_seed=MASTER_SEED + 15,
    )


def check_extremal(unconditioned: dict, diluted: dict, central: dict) -> CriterionResult:
    """Supplementary-figure checks: leading-real probability and the conditioned shift."""
    p = unconditioned["p_real_leading"]
    med2 = diluted["per_k"]["2"]["median_max_real"]
    med12 = central["per_k"]["12"]["median_max_real"]
    ok = 0.02 < p < 0.98 and med2 < med12 - 0.1
    detail = f"p_real_leading={p:.3f}; median max real k=2 {med2:.3f} vs k=12 {med12:.3f}"
    return CriterionResult(0, "extremal eigenvalues (supp)", ok, detail)


ESD_SPECS = (
    EnsembleSpec("ginibre", 500),
    EnsembleSpec("i_matrix_1", 500, theta=0.3),
    EnsembleSpec("i_matrix_2", 500, theta=0.6),
    EnsembleSpec("stable", 500, alpha=1.0, beta=0.0),
    EnsembleSpec("pareto_tail", 500, alpha=0.5),
    EnsembleSpec("elliptic", 500, tau=0.5),
)


def check_esd(extras: Dict[str, dict]) -> CriterionResult:
    gin = extras["ginibre"]
    ok = abs(gin["rho_mid"] - 1.0 / math.pi) <= 0.1 / math.pi
    parts = [f"ginibre rho_mid={gin['rho_mid']:.4f} vs {1/math.pi:.4f}"]
    for label, extra in extras.items():
        if "dilated_ellipse_fraction" in extra:
            frac = extra["dilated_ellipse_fraction"]
            ok &= frac >= 0.99
            parts.append(f"{label}: ellipse fraction={frac:.4f}")
        if label.startswith(("stable", "pareto")):
            ok &= extra["mass_beyond_2"] > 0
            parts.append(f"{label}: mass beyond 2 = {extra['mass_beyond_2']:.4f}")
    return CriterionResult(0, "ESD profiles (supp)", ok, "; ".join(parts))


def check_rectangles(extra: dict) -> CriterionResult:
    per = extra["per_ratio"]
    b1, b16 = per["1"]["B"], per["16"]["B"]
    peak8, peak16 = per["8"]["peak"], per["16"]["peak"]
    bin_width = per["16"]["bin_width"]
    ok = b1 <= 1.1 and b16 > 1.2 and abs(peak8 - peak16) <= bin_width + 1e-12
    detail = (
        f"B(1)={b1:.2f} (<=1.1), B(16)={b16:.2f} (>1.2), "
        f"|peak8-peak16|={abs(peak8 - peak16):.3f} vs bin={bin_width:.3f}"
    )
    return CriterionResult(13, "rectangle conditioning", ok, detail)
