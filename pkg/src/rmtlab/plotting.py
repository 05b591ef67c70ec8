"""Render figures next to the delimited outputs of each experiment.

Every renderer reads only the CSV/JSON files the harness just wrote, so
figures can also be regenerated later from a results directory alone.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectralmeasures import (
    inverse_semicircle_pdf,
    semi_poisson_pdf,
    standard_cauchy_pdf,
    wigner_pdf,
)


def _read_csv(path: Path) -> List[dict]:
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _read_hist(path: Path):
    rows = _read_csv(path)
    left = np.array([float(r["bin_left"]) for r in rows])
    right = np.array([float(r["bin_right"]) for r in rows])
    mass = np.array([float(r["mass"]) for r in rows])
    centers = 0.5 * (left + right)
    widths = right - left
    return centers, mass / widths, widths


def _save(fig, outdir: Path, name: str) -> str:
    fig.tight_layout()
    fig.savefig(outdir / name, dpi=130)
    plt.close(fig)
    return name


def _render_count_stats(outdir: Path) -> List[str]:
    hist = json.loads((outdir / "histogram.json").read_text())["histogram"]
    ks = sorted(int(k) for k in hist)
    freqs = np.array([hist[str(k)] for k in ks], dtype=float)
    freqs /= freqs.sum()
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.bar(ks, freqs, width=1.6, alpha=0.7)
    ax.set_xlabel("k")
    ax.set_ylabel("frequency")
    ax.set_title("distribution of the real-eigenvalue count")
    return [_save(fig, outdir, "count_histogram.png")]


def _render_mu_r_transition(outdir: Path) -> List[str]:
    summary = json.loads((outdir / "transition_summary.json").read_text())
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    for kstr in sorted(summary["per_k"], key=int):
        centers, density, _ = _read_hist(outdir / f"mu_r_k{kstr}.csv")
        ax.plot(centers, density, label=f"k={kstr}")
    xs = np.linspace(-0.99, 0.99, 300)
    ax.plot(xs, inverse_semicircle_pdf(xs), "k--", lw=1, label="inverse semicircle")
    ax.axhline(0.5, color="gray", lw=0.8, ls=":")
    ax.set_ylim(0, 2.0)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(fontsize=7)
    ax.set_title("real-eigenvalue distribution by conditioned k")
    names = [_save(fig, outdir, "mu_r_transition.png")]

    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for kstr in sorted(summary["per_k"], key=int):
        rows = _read_csv(outdir / f"gap_k{kstr}.csv")
        ax.plot(
            [float(r["y"]) for r in rows],
            [float(r["density"]) for r in rows],
            label=f"k={kstr}",
        )
    ax.set_xlabel("distance to the real axis")
    ax.set_ylabel("pair density")
    ax.legend(fontsize=7)
    ax.set_title("gap profile")
    names.append(_save(fig, outdir, "gap_profiles.png"))
    return names


def _render_gas(outdir: Path) -> List[str]:
    names = []
    centers, density, _ = _read_hist(outdir / "mu_r.csv")
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(centers, density)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.set_title("gas-phase real-particle distribution")
    names.append(_save(fig, outdir, "gas_mu_r.png"))

    centers, density, _ = _read_hist(outdir / "spacings.csv")
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(centers, density, label="gas")
    s = np.linspace(0, 4, 200)
    ax.plot(s, semi_poisson_pdf(s), "-", lw=1, label="semi-Poisson")
    ax.plot(s, wigner_pdf(s), "--", lw=1, label="Wigner")
    ax.set_xlabel("s")
    ax.set_ylabel("f(s)")
    ax.legend(fontsize=8)
    names.append(_save(fig, outdir, "gas_spacings.png"))

    rows = _read_csv(outdir / "snapshots.csv")
    last = max(int(r["snapshot"]) for r in rows)
    xs = [float(r["re"]) for r in rows if int(r["snapshot"]) == last]
    ys = [float(r["im"]) for r in rows if int(r["snapshot"]) == last]
    kinds = [r["type"] for r in rows if int(r["snapshot"]) == last]
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    pair_x = [x for x, t in zip(xs, kinds) if t == "pair"]
    pair_y = [y for y, t in zip(ys, kinds) if t == "pair"]
    real_x = [x for x, t in zip(xs, kinds) if t == "real"]
    ax.scatter(pair_x, pair_y, s=6, label="pairs")
    ax.scatter(pair_x, [-y for y in pair_y], s=6, color="C0")
    ax.scatter(real_x, [0.0] * len(real_x), s=6, color="C3", label="reals")
    ax.set_aspect("equal")
    ax.legend(fontsize=8)
    ax.set_title("final gas snapshot")
    names.append(_save(fig, outdir, "gas_snapshot.png"))
    return names


def _render_energy(outdir: Path) -> List[str]:
    rows = _read_csv(outdir / "energy_table.csv")
    ks = [int(r["k"]) for r in rows]
    means = [float(r["mean_energy"]) for r in rows]
    errs = [float(r["stderr"]) for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.errorbar(ks, means, yerr=errs, fmt="o-")
    ax.set_xlabel("k")
    ax.set_ylabel("mean energy")
    ax.set_title("gas energy of conditioned spectra")
    return [_save(fig, outdir, "energy_vs_k.png")]


def _render_spacings(outdir: Path) -> List[str]:
    centers, density, _ = _read_hist(outdir / "spacings.csv")
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(centers, density, label="data")
    s = np.linspace(0, 4, 200)
    ax.plot(s, semi_poisson_pdf(s), "-", lw=1, label="semi-Poisson")
    ax.plot(s, wigner_pdf(s), "--", lw=1, label="Wigner")
    ax.set_xlabel("s")
    ax.set_ylabel("f(s)")
    ax.legend(fontsize=8)
    ax.set_title("normalized spacing distribution")
    return [_save(fig, outdir, "spacings.png")]


def _render_extremal(outdir: Path) -> List[str]:
    fig, ax = plt.subplots(figsize=(5, 3.4))
    for name, label, style in (
        ("largest_real.csv", "largest real", "-"),
        ("largest_complex_re.csv", "largest Re (non-real)", "--"),
    ):
        centers, density, _ = _read_hist(outdir / name)
        ax.plot(centers, density, style, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    ax.set_title("extremal eigenvalue distributions")
    return [_save(fig, outdir, "extremal.png")]


def _render_process(outdir: Path) -> List[str]:
    names = []
    rows = _read_csv(outdir / "autocorr.csv")
    lags = np.array([float(r["lag"]) for r in rows])
    c = np.array([float(r["c"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.plot(lags, c / c[0] if c[0] else c)
    ax.set_xlabel("lag")
    ax.set_ylabel("C / C(0)")
    ax.set_title("count-process autocorrelation")
    names.append(_save(fig, outdir, "autocorr.png"))

    rows = _read_csv(outdir / "power_spectrum.csv")
    f = np.array([float(r["freq"]) for r in rows])
    p = np.array([float(r["power"]) for r in rows])
    fig, ax = plt.subplots(figsize=(5, 3.4))
    good = (f > 0) & (p > 0)
    ax.loglog(f[good], p[good])
    ax.set_xlabel("frequency")
    ax.set_ylabel("power")
    ax.set_title("count-process power spectrum")
    names.append(_save(fig, outdir, "power_spectrum.png"))

    rows = _read_csv(outdir / "kappa_traces.csv")
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    for traj in sorted({r["trajectory"] for r in rows}):
        ts = [float(r["t"]) for r in rows if r["trajectory"] == traj]
        ks = [float(r["kappa"]) for r in rows if r["trajectory"] == traj]
        ax.step(ts, ks, lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("kappa")
    ax.set_title("count-process trajectories")
    names.append(_save(fig, outdir, "kappa_traces.png"))
    return names


def _render_rectangles(outdir: Path) -> List[str]:
    summary = json.loads((outdir / "rectangles_summary.json").read_text())
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for key in sorted(summary["per_ratio"], key=float):
        centers, density, _ = _read_hist(outdir / f"long_axis_ratio{key}.csv")
        ax.plot(centers, density, marker="o", ms=3, label=f"L/l={key}")
    ax.set_xlabel("position along long axis / L")
    ax.set_ylabel("density")
    ax.legend(fontsize=8)
    ax.set_title("conditioned eigenvalue positions in rectangles")
    return [_save(fig, outdir, "rectangles.png")]


def _render_esd(outdir: Path) -> List[str]:
    rows = _read_csv(outdir / "esd_radial.csv")
    r = np.array([float(x["r"]) for x in rows])
    rho = np.array([float(x["rho"]) for x in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.plot(r, rho)
    ax1.axhline(1 / math.pi, color="gray", ls=":", lw=0.8)
    ax1.set_xlabel("r")
    ax1.set_ylabel("rho(r)")
    ax1.set_title("radial ESD")
    centers, density, _ = _read_hist(outdir / "mu_r.csv")
    ax2.plot(centers, density)
    xs = np.linspace(-4.9, 4.9, 300)
    ax2.plot(xs, standard_cauchy_pdf(xs), "k--", lw=0.8)
    ax2.set_xlabel("x")
    ax2.set_title("real-eigenvalue distribution")
    return [_save(fig, outdir, "esd.png")]


_RENDERERS = {
    "count_stats": _render_count_stats,
    "gaussianity": _render_count_stats,
    "mu_r_transition": _render_mu_r_transition,
    "gas": _render_gas,
    "energy_vs_k": _render_energy,
    "spacings": _render_spacings,
    "extremal": _render_extremal,
    "process": _render_process,
    "rectangles": _render_rectangles,
    "esd": _render_esd,
}


def render_experiment(experiment: str, outdir) -> List[str]:
    renderer = _RENDERERS.get(experiment)
    if renderer is None:
        return []
    try:
        return renderer(Path(outdir))
    except Exception:  # a broken figure must not lose a long campaign
        return []
