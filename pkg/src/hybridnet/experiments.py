"""Experiment runners turning a spec into CSV curves plus a run manifest.

Every runner writes one CSV per curve with '#'-prefixed header comments and
deterministic float formatting (repr), so identical seeds reproduce byte-
identical files for any thread count.  Analytic and Monte Carlo series share
a file through the leading 'source' column.  dB conversions happen here,
never inside the analytic pipeline.
"""

from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import scipy
import scipy.special

from . import __version__
from .config import ExperimentSpec
from .coverage import coverage_probability, optimal_density_ratio
from .interference import interference_cdf, mean_interference
from .model import CostModel, SystemParams, cost_to_density
from .montecarlo import (
    estimate_coverage,
    min_disk_radius,
    sample_conditional_interference,
    sample_conditional_signal,
    write_samples_csv,
)
from .signal_power import mean_signal_power, signal_gamma_spec


@dataclass(frozen=True)
class McScale:
    disk_radius: float
    n_topologies: int
    n_fading: int
    cond_topologies: int
    cond_fading: int


MC_SCALES = {
    "smoke": McScale(2000.0, 60, 20, 40, 25),
    "desk": McScale(5000.0, 500, 200, 200, 50),
    "paper": McScale(20000.0, 2000, 1000, 1000, 100),
}


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, comments: list[str], header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _case_label(case: dict, index: int) -> str:
    if "label" in case:
        return str(case["label"])
    if not case:
        return "base"
    parts = [f"{k}{case[k]:g}" if isinstance(case[k], (int, float)) else f"{k}{case[k]}"
             for k in sorted(case)]
    return "_".join(parts).replace(".", "p").replace("-", "m") or f"case{index}"


def _apply_case(params: SystemParams, case: dict) -> SystemParams:
    updates = {}
    for key in ("lambda_I", "lambda_B", "p"):
        if key in case:
            updates[key] = case[key]
    if "N" in case:
        updates["N"] = int(case["N"])
    if "Q" in case:
        n = updates.get("N", params.N)
        updates["lambda_I"] = case["Q"] / n
    return replace(params, **updates) if updates else params


def _db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


def _common_comments(spec: ExperimentSpec, params: SystemParams, extra: list[str]) -> list[str]:
    return [
        f"hybridnet {spec.kind} (version {__version__})",
        f"seed={spec.seed} mc={'on' if spec.mc_on else 'off'} scale={spec.mc_scale}",
        "params: " + " ".join(
            f"{k}={_fmt(v)}" for k, v in sorted(asdict(params).items())
        ),
        *extra,
    ]


def _disk_radius(scale: McScale, params: SystemParams) -> float:
    # never drop below the edge-effect floor, whatever the configured scale
    return max(scale.disk_radius, 1.02 * min_disk_radius(params))


# ---------------------------------------------------------------------------
# Individual experiment kinds.
# ---------------------------------------------------------------------------


def _run_signal_cdf(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    scale = MC_SCALES[spec.mc_scale]
    l0 = spec.options.get("l0", 50.0)
    outputs, summary = [], []
    for idx, case in enumerate(spec.cases):
        if "d0" not in case:
            raise ValueError(f"signal_cdf case {idx} needs d0 (got {case})")
        d0 = case["d0"]
        params = _apply_case(spec.params, {k: v for k, v in case.items() if k != "d0"})
        gamma = signal_gamma_spec(l0, d0, params)
        probs = np.linspace(1e-3, 0.999, 200)
        grid = scipy.special.gammaincinv(gamma.k, probs) * gamma.theta
        rows = [("analytic", float(x), _db(float(x)), float(p)) for x, p in zip(grid, probs)]
        if spec.mc_on:
            draws = sample_conditional_signal(
                params, l0, d0, scale.cond_topologies, scale.cond_fading, seed=spec.seed)
            emp = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
            rows += [("mc", float(x), _db(float(x)), float(p)) for x, p in zip(grid, emp)]
        label = _case_label(case, idx)
        path = out_dir / f"signal_cdf_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, params, [
                f"case: {label} (l0={l0} m, d0={d0} m)",
                f"matched gamma: k={gamma.k!r} theta={gamma.theta!r} regime={gamma.regime.value}",
                "columns: source, signal power (linear), signal power (dB), cdf",
            ]),
            ["source", "power", "power_dB", "cdf"],
            rows,
        )
        outputs.append(path)
        summary.append(f"{label}: matched shape k={gamma.k:.3f}")
    return outputs, summary


def _run_interference_cdf(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    scale = MC_SCALES[spec.mc_scale]
    l0 = spec.options.get("l0", 50.0)
    outputs, summary = [], []
    for idx, case in enumerate(spec.cases):
        d0 = case.get("d0", math.inf)
        params = _apply_case(spec.params, {k: v for k, v in case.items() if k != "d0"})
        mean = mean_interference(params, l0=l0, d0=d0)
        grid = np.geomspace(0.03 * mean, 30.0 * mean, 121)
        rows = [("analytic", float(x), _db(float(x)), interference_cdf(float(x), l0, d0, params))
                for x in grid]
        if spec.mc_on:
            draws = sample_conditional_interference(
                params, l0, d0, scale.cond_topologies, scale.cond_fading,
                seed=spec.seed, disk_radius=_disk_radius(scale, params))
            emp = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
            rows += [("mc", float(x), _db(float(x)), float(p)) for x, p in zip(grid, emp)]
        label = _case_label(case, idx)
        path = out_dir / f"interference_cdf_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, params, [
                f"case: {label} (l0={l0} m, d0={d0} m)",
                f"conditional mean interference: {mean!r}",
                "columns: source, interference power (linear), dB, cdf",
            ]),
            ["source", "power", "power_dB", "cdf"],
            rows,
        )
        outputs.append(path)
        summary.append(f"{label}: conditional mean {mean:.3e}")
    return outputs, summary


def _run_coverage_curve(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    scale = MC_SCALES[spec.mc_scale]
    outputs, summary = [], []
    for idx, case in enumerate(spec.cases):
        params = _apply_case(spec.params, case)
        rows = []
        for db in spec.sweep_grid:
            gamma = 10.0 ** (db / 10.0)
            scenario = replace(params, gamma_bar=gamma, R_bar=None)
            result = coverage_probability(scenario)
            rows.append(("analytic", float(db), result.p_cov, result.nu, 0.0))
        sim = None
        if spec.mc_on:
            sim = estimate_coverage(
                params, disk_radius=_disk_radius(scale, params),
                n_topologies=scale.n_topologies, n_fading=scale.n_fading,
                seed=spec.seed, n_jobs=threads)
            for db in spec.sweep_grid:
                gamma = 10.0 ** (db / 10.0)
                est = sim.coverage_at(gamma)
                nu = math.log2(1.0 + gamma) * params.p * params.lambda_B * est.value
                rows.append(("mc", float(db), est.value, nu, est.std_err))
        label = _case_label(case, idx)
        path = out_dir / f"coverage_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, params, [
                f"case: {label}",
                "columns: source, SINR threshold (dB), coverage probability, "
                "spatial throughput (bps/Hz/m^2), coverage std err (mc rows)",
            ]),
            ["source", "gamma_bar_dB", "p_cov", "nu", "std_err"],
            rows,
        )
        outputs.append(path)
        if sim is not None and spec.dump_samples:
            dump = out_dir / f"samples_{label}.csv"
            write_samples_csv(dump, sim)
            outputs.append(dump)
        summary.append(f"{label}: wrote {len(rows)} rows")
    return outputs, summary


def _run_mean_powers(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    scale = MC_SCALES[spec.mc_scale]
    outputs, summary = [], []
    for idx, case in enumerate(spec.cases):
        base = _apply_case(spec.params, case)
        rows = []
        for lam_i in spec.sweep_grid:
            params = replace(base, lambda_I=lam_i)
            mean_s = mean_signal_power(params)
            mean_i = mean_interference(params)
            rows.append(("analytic", lam_i, mean_s, _db(mean_s), mean_i, _db(mean_i)))
        if spec.mc_on:
            for lam_i in spec.sweep_grid:
                params = replace(base, lambda_I=lam_i)
                sim = estimate_coverage(
                    params, disk_radius=_disk_radius(scale, params),
                    n_topologies=scale.n_topologies, n_fading=scale.n_fading,
                    seed=spec.seed, n_jobs=threads)
                rows.append(("mc", lam_i, sim.mean_signal.value, _db(sim.mean_signal.value),
                             sim.mean_interference.value, _db(sim.mean_interference.value)))
        label = _case_label(case, idx)
        path = out_dir / f"mean_powers_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, base, [
                f"case: {label}",
                "columns: source, IRS density (1/m^2), mean signal (linear, dB), "
                "mean interference (linear, dB)",
            ]),
            ["source", "lambda_I", "mean_S", "mean_S_dB", "mean_I", "mean_I_dB"],
            rows,
        )
        outputs.append(path)
        gain_s = rows[-(1 + (len(spec.sweep_grid) if spec.mc_on else 0))][3] - rows[0][3]
        summary.append(f"{label}: signal gain over sweep {gain_s:+.2f} dB")
    return outputs, summary


def _run_throughput_vs_lambdai(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    scale = MC_SCALES[spec.mc_scale]
    outputs, summary = [], []
    for idx, case in enumerate(spec.cases):
        base = _apply_case(spec.params, case)
        rows = []
        for lam_i in spec.sweep_grid:
            params = replace(base, lambda_I=lam_i)
            result = coverage_probability(params)
            rows.append(("analytic", lam_i, result.p_cov, result.nu, 0.0))
        if spec.mc_on:
            for lam_i in spec.sweep_grid:
                params = replace(base, lambda_I=lam_i)
                sim = estimate_coverage(
                    params, disk_radius=_disk_radius(scale, params),
                    n_topologies=scale.n_topologies, n_fading=scale.n_fading,
                    seed=spec.seed, n_jobs=threads)
                est = sim.coverage
                rows.append(("mc", lam_i, est.value,
                             base.R_bar * params.p * params.lambda_B * est.value, est.std_err))
        label = _case_label(case, idx)
        path = out_dir / f"throughput_vs_lambdaI_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, base, [
                f"case: {label}",
                "columns: source, IRS density, coverage, throughput (bps/Hz/m^2), std err",
            ]),
            ["source", "lambda_I", "p_cov", "nu", "std_err"],
            rows,
        )
        outputs.append(path)
        summary.append(f"{label}: nu({spec.sweep_grid[0]:g})={rows[0][3]:.3e} -> "
                       f"nu({spec.sweep_grid[-1]:g})={rows[len(spec.sweep_grid)-1][3]:.3e}")
    return outputs, summary


def _run_throughput_vs_zeta(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    outputs, summary = [], []
    budget_density = spec.options["cost_over_c0"]
    for idx, case in enumerate(spec.cases):
        params = _apply_case(spec.params, {k: v for k, v in case.items() if k != "K_N"})
        cost = CostModel(c0=spec.cost.c0, K_N=case.get("K_N", spec.cost.K_N))
        total_cost = budget_density * cost.c0
        result = optimal_density_ratio(total_cost, cost, params, zeta_grid=spec.sweep_grid)
        rows = [("analytic", pt.zeta, pt.lambda_B, pt.lambda_I, pt.p_cov, pt.nu)
                for pt in result.curve]
        label = _case_label(case, idx)
        path = out_dir / f"throughput_vs_zeta_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, params, [
                f"case: {label} (budget C/c0 = {budget_density!r} per m^2, K_N={cost.K_N:g})",
                f"optimal ratio zeta*={result.zeta_star!r} with nu*={result.nu_star!r}",
                "columns: source, zeta, lambda_B, lambda_I, coverage, throughput",
            ]),
            ["source", "zeta", "lambda_B", "lambda_I", "p_cov", "nu"],
            rows,
        )
        outputs.append(path)
        summary.append(f"{label}: zeta*={result.zeta_star:g} nu*={result.nu_star:.3e} "
                       f"(nu(0)={result.curve[0].nu:.3e})")
    return outputs, summary


def _run_throughput_vs_cost(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    outputs, summary = [], []
    for idx, case in enumerate(spec.cases):
        params = _apply_case(spec.params, {k: v for k, v in case.items()
                                           if k not in ("K_N", "zeta")})
        cost = CostModel(c0=spec.cost.c0, K_N=case.get("K_N", spec.cost.K_N))
        zeta = case.get("zeta", 0.0)
        rows = []
        for budget_density in spec.sweep_grid:
            lam_b, lam_i = cost_to_density(budget_density * cost.c0, zeta, cost)
            scenario = replace(params, lambda_B=lam_b, lambda_I=lam_i)
            result = coverage_probability(scenario)
            rows.append(("analytic", budget_density, zeta, lam_b, result.p_cov, result.nu))
        label = _case_label(case, idx)
        path = out_dir / f"throughput_vs_cost_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, params, [
                f"case: {label} (zeta={zeta:g}, K_N={cost.K_N:g})",
                "columns: source, budget C/c0 (1/m^2), zeta, lambda_B, coverage, throughput",
            ]),
            ["source", "cost_over_c0", "zeta", "lambda_B", "p_cov", "nu"],
            rows,
        )
        outputs.append(path)
        summary.append(f"{label}: nu range {rows[0][5]:.3e} .. {rows[-1][5]:.3e}")
    return outputs, summary


def _run_optimal_zeta_sweep(spec: ExperimentSpec, out_dir: Path, threads: int) -> tuple[list[Path], list[str]]:
    outputs, summary = [], []
    inner_grid = spec.options.get("zeta_grid", tuple(round(0.5 * i, 6) for i in range(21)))
    for idx, case in enumerate(spec.cases):
        params = _apply_case(spec.params, {k: v for k, v in case.items() if k != "K_N"})
        cost = CostModel(c0=spec.cost.c0, K_N=case.get("K_N", spec.cost.K_N))
        rows = []
        for budget_density in spec.sweep_grid:
            result = optimal_density_ratio(
                budget_density * cost.c0, cost, params, zeta_grid=inner_grid)
            best = next(pt for pt in result.curve if pt.zeta == result.zeta_star)
            rows.append(("analytic", budget_density, result.zeta_star,
                         best.lambda_B, best.p_cov, result.nu_star))
        label = _case_label(case, idx)
        path = out_dir / f"optimal_zeta_{label}.csv"
        _write_csv(
            path,
            _common_comments(spec, params, [
                f"case: {label} (K_N={cost.K_N:g})",
                "columns: source, budget C/c0, optimal zeta, lambda_B at optimum, "
                "coverage at optimum, max throughput",
            ]),
            ["source", "cost_over_c0", "zeta_star", "lambda_B", "p_cov", "nu_star"],
            rows,
        )
        outputs.append(path)
        summary.append(f"{label}: zeta* over budgets: " +
                       ", ".join(f"{r[2]:g}" for r in rows))
    return outputs, summary


_RUNNERS = {
    "signal_cdf": _run_signal_cdf,
    "interference_cdf": _run_interference_cdf,
    "coverage_curve": _run_coverage_curve,
    "mean_powers": _run_mean_powers,
    "throughput_vs_lambdaI": _run_throughput_vs_lambdai,
    "throughput_vs_zeta": _run_throughput_vs_zeta,
    "throughput_vs_cost": _run_throughput_vs_cost,
    "optimal_zeta_sweep": _run_optimal_zeta_sweep,
}


def run_experiment(spec: ExperimentSpec, out_dir, threads: int = 1) -> dict:
    """Execute one experiment spec; returns the manifest dictionary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    outputs, summary = _RUNNERS[spec.kind](spec, out_dir, threads)
    wall = time.time() - started
    manifest = {
        "kind": spec.kind,
        "seed": spec.seed,
        "mc": spec.mc_on,
        "mc_scale": spec.mc_scale,
        "threads": threads,
        "params": asdict(spec.params),
        "cost_model": asdict(spec.cost),
        "cases": list(spec.cases),
        "sweep_variable": spec.sweep_variable,
        "sweep_grid": list(spec.sweep_grid) if spec.sweep_grid else None,
        "options": {k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in spec.options.items()},
        "outputs": [p.name for p in outputs],
        "summary": summary,
        "versions": {
            "hybridnet": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": wall,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
