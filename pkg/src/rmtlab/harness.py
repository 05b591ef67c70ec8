"""Experiment configuration, sharded parallel execution and persistence.

A campaign is described by an ExperimentConfig, split into a worker-count
independent list of shards, executed by a process pool, and merged in shard
order. All shard partials are exact (integer accumulators or ordered lists),
so (config, master_seed, version) fixes every output byte no matter how many
workers ran. Shard partials are written to disk as they complete, which makes
long campaigns resumable.

Outputs are CSV tables and JSON metadata plus a manifest with content
digests; the report path also renders matplotlib figures next to the CSVs.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from . import __version__, loggas, processes, regions
from ._eig import backend_name
from .ensembles import EnsembleSpec, generate
from .errors import ConditioningTimeout, ConfigurationError, NumericalError
from .raresampler import RareTarget, condition, ensemble_seeds
from .realstats import (
    CountAccumulator,
    CumulativeCountAccumulator,
    IntervalJointAccumulator,
    TWO_MINUS_SQRT2,
    ginibre_mean_k,
    normalize_and_test,
    profile_from_accumulator,
    summary_from_accumulator,
)
from .rng import derive_seed
from .spectra import Spectrum, spectrum_of
from .spectralmeasures import (
    Histogram1D,
    HistogramAccumulator,
    bimodality_index,
    inverse_semicircle_cdf,
    l1_to_cdf,
    semi_poisson_cdf,
    standard_cauchy_cdf,
    symmetric_edges,
    wigner_cdf,
    _unfolded_spacings,
)

EXPERIMENT_NAMES = (
    "count_stats",
    "gaussianity",
    "mu_r_transition",
    "gas",
    "energy_vs_k",
    "spacings",
    "extremal",
    "process",
    "rectangles",
    "esd",
)

MAX_SHARDS = 16
EXTREMAL_EDGES = (-0.5, 2.0, 50)
GAP_Y_MAX = 0.3
GAP_BINS = 30


def default_workers() -> int:
    env = os.environ.get("RMT_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


@dataclass
class ExperimentConfig:
    experiment: str
    ensemble: Optional[EnsembleSpec] = None
    samples: int = 0
    master_seed: int = 0
    workers: int = 0  # 0 -> default_workers()
    output_dir: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_NAMES:
            raise ConfigurationError(f"experiment: unknown experiment {self.experiment!r}")

    def to_dict(self) -> dict:
        doc = {
            "experiment": self.experiment,
            "ensemble": self.ensemble.to_dict() if self.ensemble else None,
            "samples": self.samples,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "output_dir": self.output_dir,
            "params": self.params,
        }
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {"experiment", "ensemble", "samples", "master_seed", "workers", "output_dir", "params"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigurationError(f"unknown keys in experiment config: {sorted(unknown)}")
        ens = doc.get("ensemble")
        return cls(
            experiment=doc["experiment"],
            ensemble=EnsembleSpec.from_dict(ens) if ens else None,
            samples=doc.get("samples", 0),
            master_seed=doc.get("master_seed", 0),
            workers=doc.get("workers", 0),
            output_dir=doc.get("output_dir", "results"),
            params=doc.get("params", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def content_hash(self) -> str:
        """Identity of the computation: excludes workers and output location."""
        doc = self.to_dict()
        doc.pop("workers")
        doc.pop("output_dir")
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass
class ResultRecord:
    config_hash: str
    version: str
    wall_time_s: float
    backend: str
    outputs: Dict[str, str]
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "wall_time_s": self.wall_time_s,
            "backend": self.backend,
            "outputs": self.outputs,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ResultRecord":
        return cls(
            config_hash=doc["config_hash"],
            version=doc["version"],
            wall_time_s=doc["wall_time_s"],
            backend=doc["backend"],
            outputs=doc["outputs"],
            extra=doc.get("extra", {}),
        )


def _digest(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def write_csv(path: Path, rows: List[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))


def write_histogram(path: Path, hist: Histogram1D) -> None:
    write_csv(path, list(hist.csv_rows()))
    Path(str(path) + ".meta.json").write_text(hist.metadata_json())


# ---------------------------------------------------------------------------
# shard plans and workers, one section per experiment
# ---------------------------------------------------------------------------


def _blocks(total: int, block: int):
    return [(s, min(s + block, total)) for s in range(0, total, block)]


def _spectrum_with_retry(spec: EnsembleSpec, seed: int, attempts: int = 5) -> Spectrum:
    """Resample on numerical failure (singular pencil etc.), deterministically."""
    for attempt in range(attempts):
        try:
            return spectrum_of(generate(spec, seed if attempt == 0 else derive_seed(seed, attempt)))
        except NumericalError:
            continue
    raise NumericalError(f"persistent eigensolver failure near seed {seed}", seed=seed)


def _plan_count_stats(config: ExperimentConfig):
    block = max(1, math.ceil(config.samples / MAX_SHARDS))
    return [{"start": a, "stop": b} for a, b in _blocks(config.samples, block)]


def _work_count_stats(config: ExperimentConfig, payload: dict) -> dict:
    spec = config.ensemble
    params = config.params
    acc = CountAccumulator(spec.n, spec.label())
    mu_cfg = params.get("collect_mu_r")
    mu_acc = (
        HistogramAccumulator(symmetric_edges(mu_cfg["half_width"], mu_cfg["bins"]))
        if mu_cfg
        else None
    )
    intervals = params.get("intervals")
    int_acc = IntervalJointAccumulator(intervals, spec.n) if intervals else None
    grid = params.get("brownian_grid")
    grid_acc = CumulativeCountAccumulator(grid, spec.n) if grid else None
    for index in range(payload["start"], payload["stop"]):
        spectrum = _spectrum_with_retry(spec, derive_seed(config.master_seed, index))
        acc.add(spectrum.k)
        if mu_acc is not None:
            mu_acc.add(spectrum.real_values, weight=spectrum.k)
        if int_acc is not None:
            int_acc.add_reals(spectrum.real_values)
        if grid_acc is not None:
            grid_acc.add_reals(spectrum.real_values)
    out = {"counts": acc.to_dict()}
    if mu_acc is not None:
        out["mu_r"] = mu_acc.to_dict()
    if int_acc is not None:
        out["intervals"] = int_acc.to_dict()
    if grid_acc is not None:
        out["brownian"] = grid_acc.to_dict()
    return out


def _merge_count_stats(config: ExperimentConfig, partials: List[dict], outdir: Path):
    acc = CountAccumulator.from_dict(partials[0]["counts"])
    for p in partials[1:]:
        acc.merge(CountAccumulator.from_dict(p["counts"]))
    ks_seed = derive_seed(config.master_seed, 2**31)
    summary = summary_from_accumulator(acc, ks_seed=ks_seed)
    write_csv(outdir / "count_summary.csv", [summary.csv_row()])
    (outdir / "histogram.json").write_text(summary.histogram_sidecar())
    extra = {
        "mean_k": summary.mean_k,
        "var_k": summary.var_k,
        "var_over_mean": summary.var_k / summary.mean_k,
        "samples": summary.samples,
        "ks_statistic": summary.ks_statistic,
        "ks_pvalue": summary.ks_pvalue,
        "stderr_mean": math.sqrt(summary.var_k / summary.samples),
    }
    outputs = ["count_summary.csv", "histogram.json"]
    if config.experiment == "gaussianity":
        k_star, _, _ = normalize_and_test(acc.k_values(), acc.n, seed=ks_seed)
        write_csv(outdir / "k_star.csv", [{"k_star": v} for v in sorted(k_star)])
        outputs.append("k_star.csv")
    if "mu_r" in partials[0]:
        mu = HistogramAccumulator.from_dict(partials[0]["mu_r"])
        for p in partials[1:]:
            mu.merge(HistogramAccumulator.from_dict(p["mu_r"]))
        hist = mu.finalize("probability", meta={"family": config.ensemble.label()})
        write_histogram(outdir / "mu_r.csv", hist)
        outputs += ["mu_r.csv", "mu_r.csv.meta.json"]
        ref = config.params.get("mu_r_reference")
        if ref == "cauchy":
            extra["mu_r_l1_cauchy"] = l1_to_cdf(hist, standard_cauchy_cdf)
        elif ref == "uniform":
            extra["mu_r_l1_uniform"] = l1_to_cdf(
                hist, lambda x: np.clip((np.asarray(x) + 1.0) / 2.0, 0.0, 1.0)
            )
    if "intervals" in partials[0]:
        joint = IntervalJointAccumulator.from_dict(partials[0]["intervals"])
        for p in partials[1:]:
            joint.merge(IntervalJointAccumulator.from_dict(p["intervals"]))
        means = joint.means()
        rows = [
            {"interval": f"[{a},{b})", "mean_count": m}
            for (a, b), m in zip(joint.intervals, means)
        ]
        write_csv(outdir / "interval_counts.csv", rows)
        outputs.append("interval_counts.csv")
        extra["interval_means"] = means.tolist()
        if len(joint.intervals) >= 2:
            extra["interval_correlation"] = joint.correlation(0, 1)
    if "brownian" in partials[0]:
        cum = CumulativeCountAccumulator.from_dict(partials[0]["brownian"])
        for p in partials[1:]:
            cum.merge(CumulativeCountAccumulator.from_dict(p["brownian"]))
        profile = profile_from_accumulator(cum)
        write_csv(outdir / "brownian_profile.csv", list(profile.rows()))
        write_csv(
            outdir / "increment_cov.csv",
            [
                {"i": i, "j": j, "cov": profile.increment_cov[i, j]}
                for i in range(profile.increment_cov.shape[0])
                for j in range(profile.increment_cov.shape[1])
            ],
        )
        outputs += ["brownian_profile.csv", "increment_cov.csv"]
        off = profile.increment_cov - np.diag(np.diag(profile.increment_cov))
        extra["max_offdiag_increment_cov"] = float(np.max(np.abs(off)))
        extra["brownian_var_slope"] = _affine_slope(
            profile.grid + 1.0, profile.var_cumulative
        )
    return outputs, extra


def _affine_slope(x: np.ndarray, y: np.ndarray) -> float:
    mask = x > 0
    if mask.sum() < 2:
        return math.nan
    coeffs = np.polyfit(x[mask], y[mask], 1)
    return float(coeffs[0])


def _plan_mu_r_transition(config: ExperimentConfig):
    params = config.params
    block = params.get("shard_block", 25)
    shards = []
    for k_pos, k in enumerate(params["k_list"]):
        for a, b in _blocks(params["realizations"], block):
            shards.append({"k_pos": k_pos, "k": k, "start": a, "stop": b})
    return shards


def _work_mu_r_transition(config: ExperimentConfig, payload: dict) -> dict:
    spec = config.ensemble
    params = config.params
    k = payload["k"]
    master_k = derive_seed(config.master_seed, 7700 + payload["k_pos"])
    target = RareTarget(
        "real_count",
        k,
        max_steps=params.get("max_steps", 200_000),
        burn_in_steps=params.get("burn_in_steps", 0),
    )
    mu_acc = HistogramAccumulator(
        symmetric_edges(params.get("half_width", 1.1), params.get("bins", 44))
    )
    gap_acc = HistogramAccumulator(np.linspace(0.0, GAP_Y_MAX, GAP_BINS + 1))
    steps = []
    failures = 0
    max_real, max_complex = [], []
    leading_real = 0
    for index in range(payload["start"], payload["stop"]):
        sample_seed, chain_seed = ensemble_seeds(master_k, index)
        sample = generate(spec, sample_seed)
        try:
            result = condition(sample, target, chain_seed)
        except ConditioningTimeout:
            failures += 1
            continue
        spectrum = result.spectrum()
        assert spectrum.k == k
        mu_acc.add(spectrum.real_values, weight=spectrum.k)
        pairs = spectrum.pair_representatives
        sel = np.abs(pairs.real) <= 0.8
        gap_acc.add(pairs.imag[sel])
        steps.append(result.steps_used)
        mr = spectrum.real_values[-1] if spectrum.k else None
        mc = float(pairs.real.max()) if len(pairs) else None
        max_real.append(mr)
        max_complex.append(mc)
        if mr is not None and (mc is None or mr >= mc):
            leading_real += 1
    return {
        "k": k,
        "k_pos": payload["k_pos"],
        "mu_r": mu_acc.to_dict(),
        "gap": gap_acc.to_dict(),
        "steps": steps,
        "failures": failures,
        "max_real": max_real,
        "max_complex": max_complex,
        "leading_real": leading_real,
    }


def _merge_mu_r_transition(config: ExperimentConfig, partials: List[dict], outdir: Path):
    params = config.params
    outputs = []
    extra = {"per_k": {}}
    k_bar_ref = params.get("k_bar_ref") or ginibre_mean_k(config.ensemble.n)
    for k_pos, k in enumerate(params["k_list"]):
        mine = [p for p in partials if p["k_pos"] == k_pos]
        mu = HistogramAccumulator.from_dict(mine[0]["mu_r"])
        gap = HistogramAccumulator.from_dict(mine[0]["gap"])
        for p in mine[1:]:
            mu.merge(HistogramAccumulator.from_dict(p["mu_r"]))
            gap.merge(HistogramAccumulator.from_dict(p["gap"]))
        steps = [s for p in mine for s in p["steps"]]
        failures = sum(p["failures"] for p in mine)
        hist = mu.finalize(
            "probability", meta={"family": config.ensemble.label(), "k": k}
        )
        area_hist = mu.finalize(
            "paper_area", k_bar_ref=k_bar_ref, meta={"family": config.ensemble.label(), "k": k}
        )
        write_histogram(outdir / f"mu_r_k{k}.csv", hist)
        write_histogram(outdir / f"mu_r_k{k}_paper_area.csv", area_hist)
        gap_counts = gap.counts
        widths = np.diff(gap.edges)
        states = max(gap.samples, 1)
        gap_density = gap_counts / (states * widths * 2.0 * 0.8)
        write_csv(
            outdir / f"gap_k{k}.csv",
            [
                {"y": c, "density": d}
                for c, d in zip(0.5 * (gap.edges[:-1] + gap.edges[1:]), gap_density)
            ],
        )
        outputs += [
            f"mu_r_k{k}.csv",
            f"mu_r_k{k}.csv.meta.json",
            f"mu_r_k{k}_paper_area.csv",
            f"mu_r_k{k}_paper_area.csv.meta.json",
            f"gap_k{k}.csv",
        ]
        max_real = [v for p in mine for v in p["max_real"] if v is not None]
        max_complex = [v for p in mine for v in p["max_complex"] if v is not None]
        leading = sum(p["leading_real"] for p in mine)
        successes = len(steps)
        info = {
            "k": k,
            "successes": successes,
            "failures": failures,
            "mean_steps": float(np.mean(steps)) if steps else math.nan,
            "median_steps": float(np.median(steps)) if steps else math.nan,
            "B": bimodality_index(hist, params.get("x_ref", 0.8), params.get("b_halo", 1)),
            "l1_inverse_semicircle": l1_to_cdf(hist, inverse_semicircle_cdf),
            "p_real_leading": leading / successes if successes else math.nan,
            "median_max_real": float(np.median(max_real)) if max_real else math.nan,
        }
        extra["per_k"][str(k)] = info
    write_json(outdir / "transition_summary.json", extra)
    outputs.append("transition_summary.json")
    return outputs, extra


def _plan_gas(config: ExperimentConfig):
    chains = config.params.get("chains", 2)
    return [{"chain": c} for c in range(chains)]


def _work_gas(config: ExperimentConfig, payload: dict) -> dict:
    params = config.params
    n, k = params["n"], params["k"]
    chains = params.get("chains", 2)
    per_chain = math.ceil(params["snapshots"] / chains)
    burn_in = params.get("burn_in", 5000 * n)
    thin = params.get("thin", 10 * n)
    states = loggas.sample_constrained_gas(
        n,
        k,
        burn_in + per_chain * thin,
        derive_seed(config.master_seed, 500 + payload["chain"]),
        burn_in=burn_in,
        thin=thin,
    )
    return {
        "chain": payload["chain"],
        "snapshots": [
            {
                "reals": s.reals.tolist(),
                "pairs_re": s.pairs.real.tolist(),
                "pairs_im": s.pairs.imag.tolist(),
                "energy": s.energy,
            }
            for s in states
        ],
    }


def _merge_gas(config: ExperimentConfig, partials: List[dict], outdir: Path):
    params = config.params
    n, k = params["n"], params["k"]
    snapshots = []
    for p in sorted(partials, key=lambda d: d["chain"]):
        for snap in p["snapshots"]:
            snapshots.append(snap)
    rows = []
    for idx, snap in enumerate(snapshots):
        for v in snap["reals"]:
            rows.append({"snapshot": idx, "type": "real", "re": v, "im": 0.0})
        for re, im in zip(snap["pairs_re"], snap["pairs_im"]):
            rows.append({"snapshot": idx, "type": "pair", "re": re, "im": im})
    write_csv(outdir / "snapshots.csv", rows)

    half_width = params.get("half_width", 1.6)
    mu_acc = HistogramAccumulator(symmetric_edges(half_width, params.get("bins", 48)))
    reals_streams = []
    for snap in snapshots:
        reals = np.asarray(snap["reals"])
        mu_acc.add(reals, weight=len(reals))
        reals_streams.append(reals)
    hist = mu_acc.finalize("probability", meta={"kind": "gas_mu_r", "n": n, "k": k})
    write_histogram(outdir / "mu_r.csv", hist)

    from .spectralmeasures import spacings as spacing_fn

    spacing = spacing_fn(None, reals_override=reals_streams)
    write_histogram(outdir / "spacings.csv", spacing.histogram)

    gas_states = [
        loggas.GasState(
            np.asarray(s["reals"]),
            np.asarray(s["pairs_re"]) + 1j * np.asarray(s["pairs_im"]),
            n,
            s["energy"],
        )
        for s in snapshots
    ]
    y_grid = np.linspace(0.0, params.get("gap_y_max", GAP_Y_MAX), GAP_BINS + 1)
    profile = loggas.gap_profile(gas_states, y_grid)
    write_csv(
        outdir / "gap_profile.csv",
        [{"y": y, "density": d} for y, d in zip(profile.y_centers, profile.density)],
    )
    energies = [s["energy"] for s in snapshots]
    extra = {
        "snapshots": len(snapshots),
        "B": bimodality_index(hist, params.get("x_ref", 0.8), params.get("b_halo", 1)),
        "l1_semi_poisson": spacing.l1_semi_poisson,
        "l1_wigner": spacing.l1_wigner,
        "zeta": profile.zeta,
        "mean_energy": float(np.mean(energies)),
    }
    write_json(outdir / "gas_summary.json", extra)
    outputs = [
        "snapshots.csv",
        "mu_r.csv",
        "mu_r.csv.meta.json",
        "spacings.csv",
        "spacings.csv.meta.json",
        "gap_profile.csv",
        "gas_summary.json",
    ]
    return outputs, extra


def _plan_energy(config: ExperimentConfig):
    params = config.params
    if params.get("source", "matrices") == "gas":
        return [{"k_pos": i, "k": k} for i, k in enumerate(params["k_list"])]
    block = params.get("shard_block", 10)
    shards = []
    for k_pos, k in enumerate(params["k_list"]):
        for a, b in _blocks(params["samples"], block):
            shards.append({"k_pos": k_pos, "k": k, "start": a, "stop": b})
    return shards


def _work_energy(config: ExperimentConfig, payload: dict) -> dict:
    params = config.params
    n = params["n"]
    k = payload["k"]
    source = params.get("source", "matrices")
    if source == "gas":
        thin = params.get("thin", 10 * n)
        burn = params.get("burn_in", 5000 * n)
        states = loggas.sample_constrained_gas(
            n, k, burn + params["samples"] * thin,
            derive_seed(config.master_seed, 900 + payload["k_pos"]),
            burn_in=burn, thin=thin,
        )
        return {"k_pos": payload["k_pos"], "k": k, "energies": [s.energy for s in states], "failures": 0}
    spec = EnsembleSpec("ginibre", n)
    master_k = derive_seed(config.master_seed, 7700 + payload["k_pos"])
    target = RareTarget("real_count", k, max_steps=params.get("max_steps", 200_000))
    energies = []
    failures = 0
    for index in range(payload["start"], payload["stop"]):
        sample_seed, chain_seed = ensemble_seeds(master_k, index)
        sample = generate(spec, sample_seed)
        try:
            result = condition(sample, target, chain_seed)
        except ConditioningTimeout:
            failures += 1
            continue
        state = loggas.GasState.from_spectrum(result.spectrum())
        energies.append(loggas.gas_energy(state))
    return {"k_pos": payload["k_pos"], "k": k, "energies": energies, "failures": failures}


def _merge_energy(config: ExperimentConfig, partials: List[dict], outdir: Path):
    params = config.params
    source = params.get("source", "matrices")
    rows = []
    extra = {"per_k": {}}
    for k_pos, k in enumerate(params["k_list"]):
        energies = [e for p in partials if p["k_pos"] == k_pos for e in p["energies"]]
        failures = sum(p["failures"] for p in partials if p["k_pos"] == k_pos)
        row = loggas.energy_rows_from_states(k, energies, source)
        row["failures"] = failures
        rows.append(row)
        extra["per_k"][str(k)] = row
    write_csv(outdir / "energy_table.csv", rows)
    return ["energy_table.csv"], extra


def _plan_spacings(config: ExperimentConfig):
    block = max(1, math.ceil(config.samples / MAX_SHARDS))
    return [{"start": a, "stop": b} for a, b in _blocks(config.samples, block)]


def _work_spacings(config: ExperimentConfig, payload: dict) -> dict:
    spec = config.ensemble
    params = config.params
    edges = np.linspace(0.0, params.get("s_max", 4.0), params.get("bins", 40) + 1)
    acc = HistogramAccumulator(edges)
    skipped = 0
    for index in range(payload["start"], payload["stop"]):
        spectrum = _spectrum_with_retry(spec, derive_seed(config.master_seed, index))
        if spectrum.k < 3:
            skipped += 1
            continue
        acc.add(_unfolded_spacings(spectrum.real_values))
    return {"hist": acc.to_dict(), "skipped": skipped}


def _merge_spacings(config: ExperimentConfig, partials: List[dict], outdir: Path):
    acc = HistogramAccumulator.from_dict(partials[0]["hist"])
    for p in partials[1:]:
        acc.merge(HistogramAccumulator.from_dict(p["hist"]))
    hist = acc.finalize("probability", meta={"kind": "spacings", "family": config.ensemble.label()})
    write_histogram(outdir / "spacings.csv", hist)
    extra = {
        "l1_semi_poisson": l1_to_cdf(hist, semi_poisson_cdf),
        "l1_wigner": l1_to_cdf(hist, wigner_cdf),
        "skipped": sum(p["skipped"] for p in partials),
    }
    write_json(outdir / "spacings_summary.json", extra)
    return ["spacings.csv", "spacings.csv.meta.json", "spacings_summary.json"], extra


def _plan_extremal(config: ExperimentConfig):
    block = max(1, math.ceil(config.samples / MAX_SHARDS))
    return [{"start": a, "stop": b} for a, b in _blocks(config.samples, block)]


def _work_extremal(config: ExperimentConfig, payload: dict) -> dict:
    spec = config.ensemble
    params = config.params
    lo, hi, bins = params.get("window", EXTREMAL_EDGES)
    edges = np.linspace(lo, hi, int(bins) + 1)
    real_acc = HistogramAccumulator(edges)
    complex_acc = HistogramAccumulator(edges)
    leading = 0
    samples = 0
    k_condition = params.get("k_condition")
    target = (
        RareTarget("real_count", k_condition, max_steps=params.get("max_steps", 200_000))
        if k_condition is not None
        else None
    )
    for index in range(payload["start"], payload["stop"]):
        sample_seed, chain_seed = ensemble_seeds(config.master_seed, index)
        if target is None:
            spectrum = _spectrum_with_retry(spec, sample_seed)
        else:
            try:
                spectrum = condition(generate(spec, sample_seed), target, chain_seed).spectrum()
            except ConditioningTimeout:
                continue
        samples += 1
        has_reals = spectrum.k > 0
        pairs = spectrum.pair_representatives
        mr = spectrum.real_values[-1] if has_reals else -math.inf
        mc = float(pairs.real.max()) if len(pairs) else -math.inf
        if has_reals:
            real_acc.add(np.array([mr]))
        if len(pairs):
            complex_acc.add(np.array([mc]))
        if has_reals and mr >= mc:
            leading += 1
    return {
        "real": real_acc.to_dict(),
        "complex": complex_acc.to_dict(),
        "leading": leading,
        "samples": samples,
    }


def _merge_extremal(config: ExperimentConfig, partials: List[dict], outdir: Path):
    real_acc = HistogramAccumulator.from_dict(partials[0]["real"])
    complex_acc = HistogramAccumulator.from_dict(partials[0]["complex"])
    for p in partials[1:]:
        real_acc.merge(HistogramAccumulator.from_dict(p["real"]))
        complex_acc.merge(HistogramAccumulator.from_dict(p["complex"]))
    samples = sum(p["samples"] for p in partials)
    leading = sum(p["leading"] for p in partials)
    real_hist = real_acc.finalize("probability", meta={"kind": "largest_real"})
    complex_hist = complex_acc.finalize("probability", meta={"kind": "largest_complex_re"})
    write_histogram(outdir / "largest_real.csv", real_hist)
    write_histogram(outdir / "largest_complex_re.csv", complex_hist)
    median_real = _hist_median(real_hist)
    extra = {
        "samples": samples,
        "p_real_leading": leading / samples if samples else math.nan,
        "median_largest_real": median_real,
    }
    write_json(outdir / "extremal_summary.json", extra)
    return [
        "largest_real.csv",
        "largest_real.csv.meta.json",
        "largest_complex_re.csv",
        "largest_complex_re.csv.meta.json",
        "extremal_summary.json",
    ], extra


def _hist_median(hist: Histogram1D) -> float:
    total = hist.total_mass()
    if total <= 0:
        return math.nan
    cum = np.cumsum(hist.masses)
    idx = int(np.searchsorted(cum, total / 2.0))
    idx = min(idx, len(hist.centers) - 1)
    return float(hist.centers[idx])


def _plan_process(config: ExperimentConfig):
    params = config.params
    block = params.get("shard_block", 8)
    return [{"start": a, "stop": b} for a, b in _blocks(params["trajectories"], block)]


def _work_process(config: ExperimentConfig, payload: dict) -> dict:
    params = config.params
    pconfig = processes.ProcessConfig(
        kind=params.get("kind", "ou"),
        n=params["n"],
        dt=params.get("dt", 1e-3),
        horizon=params.get("horizon", 2.0),
    )
    eig_every = params.get("eig_every", 10)
    series = {}
    for index in range(payload["start"], payload["stop"]):
        ks = processes.run_kappa_trajectory(
            pconfig, derive_seed(config.master_seed, index), eig_every=eig_every
        )
        series[str(index)] = ks.counts.tolist()
    return {"counts": series}


def _merge_process(config: ExperimentConfig, partials: List[dict], outdir: Path):
    params = config.params
    n = params["n"]
    kind = params.get("kind", "ou")
    dt_sample = params.get("dt", 1e-3) * params.get("eig_every", 10)
    all_series = {}
    for p in partials:
        all_series.update(p["counts"])
    order = sorted(all_series, key=int)
    counts = np.array([all_series[i] for i in order], dtype=np.float64)
    k_bar = ginibre_mean_k(n)
    kappa = (counts - k_bar) / (TWO_MINUS_SQRT2 * k_bar)
    acf = processes.autocorrelation(kappa, dt_sample, max_lag=params.get("max_lag"))
    freqs, power = processes.power_spectrum(kappa, dt_sample)
    write_csv(
        outdir / "autocorr.csv",
        [{"lag": l, "c": c} for l, c in zip(acf.lags, acf.c)],
    )
    write_csv(
        outdir / "power_spectrum.csv",
        [{"freq": f, "power": p} for f, p in zip(freqs, power)],
    )
    trace_rows = []
    times = (np.arange(counts.shape[1]) + 1) * dt_sample
    for traj in range(min(3, counts.shape[0])):
        for t, k in zip(times, counts[traj]):
            trace_rows.append(
                {
                    "trajectory": traj,
                    "t": t,
                    "k": int(k),
                    "kappa": (k - k_bar) / (TWO_MINUS_SQRT2 * k_bar),
                    "kappa_star": (k - k_bar) / math.sqrt(TWO_MINUS_SQRT2 * k_bar),
                }
            )
    write_csv(outdir / "kappa_traces.csv", trace_rows)

    # KS of the stationary counts: thin to ~decorrelated samples and pool
    tau_c = acf.tau_c if math.isfinite(acf.tau_c) else 1.0 / n
    stride = max(1, int(round(5.0 * tau_c / dt_sample)))
    pooled = counts[:, ::stride].ravel().astype(np.int64)
    ks_stat = ks_p = None
    if pooled.size >= 500:
        _, ks_stat, ks_p = normalize_and_test(
            pooled, n, seed=derive_seed(config.master_seed, 2**32)
        )
    extra = {
        "kind": kind,
        "n": n,
        "trajectories": counts.shape[0],
        "c0": acf.c0,
        "tau_c": acf.tau_c,
        "poor_fit": bool(acf.poor_fit),
        "ks_statistic": ks_stat,
        "ks_pvalue": ks_p,
        "stationary_samples": int(pooled.size),
        "dt_sample": dt_sample,
    }
    write_json(outdir / "process_summary.json", extra)
    return [
        "autocorr.csv",
        "power_spectrum.csv",
        "kappa_traces.csv",
        "process_summary.json",
    ], extra


def _plan_rectangles(config: ExperimentConfig):
    params = config.params
    block = params.get("shard_block", 5)
    shards = []
    for pos, ratio in enumerate(params["ratios"]):
        for a, b in _blocks(params["samples"], block):
            shards.append({"ratio_pos": pos, "ratio": ratio, "start": a, "stop": b})
    shards.append({"ratio_pos": -1, "control": True})
    return shards


def _work_rectangles(config: ExperimentConfig, payload: dict) -> dict:
    params = config.params
    n, area = params["n"], params["area"]
    if payload.get("control"):
        from ._eig import fast_eigvals
        from .ensembles import complex_ginibre
        from .spectra import count_in_rect

        rect = regions.rectangle_for_ratio(area, params["ratios"][0])
        counts = []
        for index in range(params.get("control_samples", 100)):
            matrix = complex_ginibre(n, derive_seed(config.master_seed, 10_000_000 + index))
            counts.append(count_in_rect(fast_eigvals(matrix), rect))
        return {"ratio_pos": -1, "control_counts": counts}
    ratio = payload["ratio"]
    rect = regions.rectangle_for_ratio(area, ratio)
    acc = HistogramAccumulator(np.linspace(-0.5, 0.5, params.get("bins", regions.DEFAULT_BINS) + 1))
    steps_list = []
    failures = 0
    for index in range(payload["start"], payload["stop"]):
        sample_seed, chain_seed = regions.chain_seeds(
            config.master_seed, payload["ratio_pos"], index
        )
        try:
            inside, steps = regions.condition_rectangle(
                n, rect, params["target"], sample_seed, chain_seed,
                params.get("max_steps", 30_000),
            )
        except ConditioningTimeout:
            failures += 1
            continue
        u = (inside.real - 0.0) / (rect.x1 - rect.x0)
        acc.add(u)
        steps_list.append(steps)
    return {
        "ratio_pos": payload["ratio_pos"],
        "hist": acc.to_dict(),
        "steps": steps_list,
        "failures": failures,
    }


def _merge_rectangles(config: ExperimentConfig, partials: List[dict], outdir: Path):
    params = config.params
    outputs = []
    extra = {"per_ratio": {}}
    for pos, ratio in enumerate(params["ratios"]):
        mine = [p for p in partials if p["ratio_pos"] == pos]
        acc = HistogramAccumulator.from_dict(mine[0]["hist"])
        for p in mine[1:]:
            acc.merge(HistogramAccumulator.from_dict(p["hist"]))
        steps = [s for p in mine for s in p["steps"]]
        failures = sum(p["failures"] for p in mine)
        hist = acc.finalize("probability", meta={"ratio": ratio})
        name = f"long_axis_ratio{ratio:g}.csv"
        write_histogram(outdir / name, hist)
        outputs += [name, name + ".meta.json"]
        extra["per_ratio"][f"{ratio:g}"] = {
            "ratio": ratio,
            "successes": len(steps),
            "failures": failures,
            "mean_steps": float(np.mean(steps)) if steps else math.nan,
            "B": bimodality_index(hist, params.get("x_ref", 0.4)),
            "peak": regions.peak_position(hist),
            "bin_width": float(np.diff(hist.edges)[0]),
        }
    control = [p for p in partials if p["ratio_pos"] == -1]
    if control:
        counts = control[0]["control_counts"]
        extra["control_mean_count"] = float(np.mean(counts))
        extra["expected_mean_count"] = params["n"] * params["area"] / math.pi
    write_json(outdir / "rectangles_summary.json", extra)
    outputs.append("rectangles_summary.json")
    return outputs, extra


def _plan_esd(config: ExperimentConfig):
    block = max(1, math.ceil(config.samples / MAX_SHARDS))
    return [{"start": a, "stop": b} for a, b in _blocks(config.samples, block)]


def _work_esd(config: ExperimentConfig, payload: dict) -> dict:
    spec = config.ensemble
    params = config.params
    r_edges = np.linspace(0.0, params.get("r_max", 2.0), params.get("bins", 60) + 1)
    r_acc = HistogramAccumulator(r_edges)
    mu_acc = HistogramAccumulator(
        symmetric_edges(params.get("half_width", 5.0), params.get("mu_r_bins", 50))
    )
    dilated_inside = 0
    total = 0
    tau = spec.correlation_tau() if spec.family in ("elliptic", "almost_symmetric") else None
    for index in range(payload["start"], payload["stop"]):
        spectrum = _spectrum_with_retry(spec, derive_seed(config.master_seed, index))
        r_acc.add(np.abs(spectrum.eigenvalues))
        mu_acc.add(spectrum.real_values, weight=spectrum.k)
        total += spectrum.n
        if tau is not None:
            a, b = 1.05 * (1.0 + tau), 1.05 * (1.0 - tau)
            w = spectrum.eigenvalues
            dilated_inside += int(np.sum((w.real / a) ** 2 + (w.imag / b) ** 2 <= 1.0))
    return {
        "radial": r_acc.to_dict(),
        "mu_r": mu_acc.to_dict(),
        "dilated_inside": dilated_inside,
        "total_eigs": total,
    }


def _merge_esd(config: ExperimentConfig, partials: List[dict], outdir: Path):
    spec = config.ensemble
    r_acc = HistogramAccumulator.from_dict(partials[0]["radial"])
    mu_acc = HistogramAccumulator.from_dict(partials[0]["mu_r"])
    for p in partials[1:]:
        r_acc.merge(HistogramAccumulator.from_dict(p["radial"]))
        mu_acc.merge(HistogramAccumulator.from_dict(p["mu_r"]))
    samples = r_acc.samples
    areas = math.pi * np.diff(r_acc.edges**2)
    density = r_acc.counts / (areas * samples * spec.n)
    centers = 0.5 * (r_acc.edges[:-1] + r_acc.edges[1:])
    write_csv(
        outdir / "esd_radial.csv",
        [{"r": r, "rho": d} for r, d in zip(centers, density)],
    )
    hist = mu_acc.finalize("probability", meta={"family": spec.label()})
    write_histogram(outdir / "mu_r.csv", hist)
    mass_beyond = float(
        r_acc.counts[centers > 2.0].sum() + r_acc.outside
    ) / max(1, samples * spec.n)
    extra = {
        "samples": samples,
        "rho_mid": float(np.mean(density[(centers > 0.1) & (centers < 0.9)])),
        "mass_beyond_2": mass_beyond,
        "radial_outside": r_acc.outside,
    }
    total = sum(p["total_eigs"] for p in partials)
    inside = sum(p["dilated_inside"] for p in partials)
    if spec.family in ("elliptic", "almost_symmetric"):
        extra["dilated_ellipse_fraction"] = inside / total if total else math.nan
    write_json(outdir / "esd_summary.json", extra)
    return ["esd_radial.csv", "mu_r.csv", "mu_r.csv.meta.json", "esd_summary.json"], extra


@dataclass
class _Experiment:
    plan: Callable
    work: Callable
    merge: Callable


_REGISTRY = {
    "count_stats": _Experiment(_plan_count_stats, _work_count_stats, _merge_count_stats),
    "gaussianity": _Experiment(_plan_count_stats, _work_count_stats, _merge_count_stats),
    "mu_r_transition": _Experiment(_plan_mu_r_transition, _work_mu_r_transition, _merge_mu_r_transition),
    "gas": _Experiment(_plan_gas, _work_gas, _merge_gas),
    "energy_vs_k": _Experiment(_plan_energy, _work_energy, _merge_energy),
    "spacings": _Experiment(_plan_spacings, _work_spacings, _merge_spacings),
    "extremal": _Experiment(_plan_extremal, _work_extremal, _merge_extremal),
    "process": _Experiment(_plan_process, _work_process, _merge_process),
    "rectangles": _Experiment(_plan_rectangles, _work_rectangles, _merge_rectangles),
    "esd": _Experiment(_plan_esd, _work_esd, _merge_esd),
}


def _run_shard(args):
    config_doc, shard_id, payload = args
    config = ExperimentConfig.from_dict(config_doc)
    partial = _REGISTRY[config.experiment].work(config, payload)
    return shard_id, partial


def run(config: ExperimentConfig, render: bool = True) -> ResultRecord:
    """Execute a campaign: shard, compute (resuming any partials), merge, persist."""
    impl = _REGISTRY[config.experiment]
    outdir = Path(config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    partial_dir = outdir / "partials"
    partial_dir.mkdir(exist_ok=True)
    shards = impl.plan(config)
    t0 = time.time()

    partials: Dict[int, dict] = {}
    missing = []
    for shard_id, payload in enumerate(shards):
        ppath = partial_dir / f"shard_{shard_id:04d}.json"
        if ppath.exists():
            partials[shard_id] = json.loads(ppath.read_text())
        else:
            missing.append((config.to_dict(), shard_id, payload))

    workers = config.workers or default_workers()
    if missing:
        if workers > 1 and len(missing) > 1:
            import multiprocessing as mp

            ctx = mp.get_context("spawn")
            with ctx.Pool(min(workers, len(missing))) as pool:
                for shard_id, partial in pool.imap_unordered(_run_shard, missing):
                    (partial_dir / f"shard_{shard_id:04d}.json").write_text(
                        json.dumps(partial)
                    )
                    partials[shard_id] = partial
        else:
            for args in missing:
                shard_id, partial = _run_shard(args)
                (partial_dir / f"shard_{shard_id:04d}.json").write_text(json.dumps(partial))
                partials[shard_id] = partial

    ordered = [partials[i] for i in range(len(shards))]
    outputs, extra = impl.merge(config, ordered, outdir)
    (outdir / "config.json").write_text(config.to_json())
    outputs = list(outputs) + ["config.json"]

    if render:
        from . import plotting

        figures = plotting.render_experiment(config.experiment, outdir)
        outputs += figures

    record = ResultRecord(
        config_hash=config.content_hash(),
        version=__version__,
        wall_time_s=time.time() - t0,
        backend=backend_name(),
        outputs={name: _digest(outdir / name) for name in outputs},
        extra=extra,
    )
    write_json(outdir / "manifest.json", record.to_dict())
    return record


def load_record(outdir: Path) -> ResultRecord:
    return ResultRecord.from_dict(json.loads((Path(outdir) / "manifest.json").read_text()))


def verify_record(outdir: Path, record: ResultRecord) -> bool:
    outdir = Path(outdir)
    for name, digest in record.outputs.items():
        path = outdir / name
        if not path.exists() or _digest(path) != digest:
            return False
    return True


def ensure_run(config: ExperimentConfig, cache_root, render: bool = True):
    """Run-or-load: campaigns are cached by content hash and resume from partials."""
    cache_root = Path(cache_root)
    outdir = cache_root / f"{config.experiment}-{config.content_hash()[:12]}"
    manifest = outdir / "manifest.json"
    if manifest.exists():
        record = load_record(outdir)
        if record.config_hash == config.content_hash() and verify_record(outdir, record):
            return record, outdir
    import dataclasses

    config = dataclasses.replace(config, output_dir=str(outdir))
    record = run(config, render=render)
    return record, outdir
