"""Experiment spec files: flat ``key = value`` lines under [section] headers.

Sections: [experiment] (kind, seed, mc, cases, kind-specific options),
[params] (system parameters, W in dB), [sweep] (variable, grid).  Grids are
either comma lists ("0,5e-6,1e-5") or ranges "start:stop:step" (inclusive).
Cases are semicolon-separated groups of space-separated ``key=value`` pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import LAMBDA0, CostModel, ParameterError, SystemParams, params_from_mapping


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


@dataclass(frozen=True)
class KindInfo:
    description: str
    sweep_variable: str | None
    case_keys: tuple[str, ...]
    option_keys: tuple[str, ...] = ()
    default_grid: tuple[float, ...] | None = None


EXPERIMENT_KINDS: dict[str, KindInfo] = {
    "signal_cdf": KindInfo(
        "Conditional signal-power cdf at fixed serving/IRS distances; "
        "analytic matched-Gamma vs Monte Carlo empirical cdf.",
        None,
        ("d0", "N", "label"),
        ("l0",),
    ),
    "interference_cdf": KindInfo(
        "Conditional interference-power cdf at a fixed serving distance; "
        "analytic transform inversion vs Monte Carlo empirical cdf.",
        None,
        ("d0", "N", "p", "lambda_I", "label"),
        ("l0",),
    ),
    "coverage_curve": KindInfo(
        "Coverage probability vs SINR threshold; cases may pin Q = N*lambda_I.",
        "gamma_bar_dB",
        ("Q", "N", "lambda_I", "lambda_B", "p", "label"),
        (),
        tuple(float(x) for x in range(-10, 21)),
    ),
    "mean_powers": KindInfo(
        "Unconditional mean signal and interference power vs IRS density.",
        "lambda_I",
        ("lambda_B", "p", "label"),
        (),
        (0.0, 1 * LAMBDA0, 2 * LAMBDA0, 5 * LAMBDA0, 10 * LAMBDA0, 20 * LAMBDA0),
    ),
    "throughput_vs_lambdaI": KindInfo(
        "Spatial throughput vs IRS density under fixed BS density.",
        "lambda_I",
        ("lambda_B", "p", "label"),
        (),
        (0.0, 1 * LAMBDA0, 2 * LAMBDA0, 5 * LAMBDA0, 10 * LAMBDA0, 20 * LAMBDA0),
    ),
    "throughput_vs_zeta": KindInfo(
        "Spatial throughput vs IRS/BS density ratio under a fixed budget; "
        "reports the optimal ratio.",
        "zeta",
        ("K_N", "p", "label"),
        ("cost_over_c0",),
        tuple(round(0.25 * i, 6) for i in range(41)),
    ),
    "throughput_vs_cost": KindInfo(
        "Spatial throughput vs total deployment budget at fixed density ratios.",
        "cost_over_c0",
        ("zeta", "K_N", "p", "label"),
        (),
    ),
    "optimal_zeta_sweep": KindInfo(
        "Optimal density ratio and its throughput across deployment budgets.",
        "cost_over_c0",
        ("K_N", "p", "label"),
        ("zeta_grid",),
    ),
}

_EXPERIMENT_KEYS = ("kind", "seed", "mc", "mc_scale", "cases", "dump_samples")
MC_SCALE_NAMES = ("smoke", "desk", "paper")


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment description."""

    kind: str
    params: SystemParams
    cost: CostModel
    seed: int
    mc_on: bool
    mc_scale: str
    sweep_variable: str | None
    sweep_grid: tuple[float, ...] | None
    cases: tuple[dict, ...]
    options: dict = field(default_factory=dict)
    dump_samples: bool = False


def parse_sections(path) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: str | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip()
                if current in sections:
                    raise ConfigError(f"{path}:{lineno}: duplicate section [{current}]")
                sections[current] = {}
                continue
            if current is None:
                raise ConfigError(f"{path}:{lineno}: key outside any [section]")
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in sections[current]:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r} in [{current}]")
            sections[current][key] = value
    return sections


def parse_grid(text: str) -> tuple[float, ...]:
    """Comma list or inclusive 'start:stop:step' range."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range grid must be start:stop:step (got {text!r})")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range grid {text!r}: need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        grid = tuple(round(start + i * step, 12) for i in range(count))
    else:
        try:
            grid = tuple(float(p) for p in text.split(",") if p.strip())
        except ValueError as exc:
            raise ConfigError(f"bad grid value in {text!r}: {exc}") from exc
    if not grid:
        raise ConfigError("sweep grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError(f"sweep grid must be strictly ascending (got {text!r})")
    return grid


def parse_cases(text: str, allowed: tuple[str, ...]) -> tuple[dict, ...]:
    cases = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        case: dict = {}
        for pair in chunk.split():
            if "=" not in pair:
                raise ConfigError(f"case entry {pair!r} is not key=value")
            key, value = pair.split("=", 1)
            if key not in allowed:
                raise ConfigError(
                    f"case key {key!r} not allowed here; allowed keys: {', '.join(allowed)}"
                )
            case[key] = value if key == "label" else float(value)
        if "N" in case:
            case["N"] = int(case["N"])
        cases.append(case)
    if not cases:
        raise ConfigError("cases line present but no cases parsed")
    return tuple(cases)


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{key} must be on/off (got {value!r})")


def load_spec(
    path,
    seed_override: int | None = None,
    mc_scale_override: str | None = None,
) -> ExperimentSpec:
    """Parse and validate an experiment config file."""
    sections = parse_sections(path)
    unknown_sections = set(sections) - {"experiment", "params", "sweep"}
    if unknown_sections:
        raise ConfigError(
            f"unknown sections {sorted(unknown_sections)}; expected [experiment], [params], [sweep]"
        )
    if "experiment" not in sections:
        raise ConfigError(f"{path}: missing [experiment] section")
    exp = dict(sections["experiment"])

    kind = exp.pop("kind", None)
    if kind is None:
        raise ConfigError("missing 'kind' in [experiment]")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"unknown kind {kind!r}; valid kinds: {', '.join(sorted(EXPERIMENT_KINDS))}"
        )
    info = EXPERIMENT_KINDS[kind]

    seed = int(exp.pop("seed", "0"))
    if seed_override is not None:
        seed = seed_override
    mc_on = _parse_bool(exp.pop("mc", "off"), "mc")
    mc_scale = exp.pop("mc_scale", "desk")
    if mc_scale_override is not None:
        mc_scale = mc_scale_override
    if mc_scale not in MC_SCALE_NAMES:
        raise ConfigError(f"mc_scale must be one of {MC_SCALE_NAMES} (got {mc_scale!r})")
    dump_samples = _parse_bool(exp.pop("dump_samples", "off"), "dump_samples")

    cases: tuple[dict, ...] = (dict(),)
    if "cases" in exp:
        cases = parse_cases(exp.pop("cases"), info.case_keys)

    options: dict = {}
    for key in info.option_keys:
        if key in exp:
            raw = exp.pop(key)
            options[key] = parse_grid(raw) if key == "zeta_grid" else float(raw)
    if exp:
        raise ConfigError(
            f"unknown [experiment] keys {sorted(exp)}; valid: "
            f"{', '.join(_EXPERIMENT_KEYS + info.option_keys)}"
        )
    if kind == "throughput_vs_zeta" and "cost_over_c0" not in options:
        raise ConfigError("throughput_vs_zeta requires cost_over_c0 in [experiment]")

    try:
        params, cost = params_from_mapping(sections.get("params", {}))
    except ParameterError as exc:
        raise ConfigError(f"bad [params] section: {exc}") from exc

    sweep_variable = info.sweep_variable
    sweep_grid = info.default_grid
    if "sweep" in sections:
        sweep = dict(sections["sweep"])
        variable = sweep.pop("variable", None)
        grid_text = sweep.pop("grid", None)
        if sweep:
            raise ConfigError(f"unknown [sweep] keys {sorted(sweep)}; valid: variable, grid")
        if info.sweep_variable is None:
            raise ConfigError(f"kind {kind!r} does not take a [sweep] section")
        if variable is not None and variable != info.sweep_variable:
            raise ConfigError(
                f"kind {kind!r} sweeps {info.sweep_variable!r}, not {variable!r}"
            )
        if grid_text is not None:
            sweep_grid = parse_grid(grid_text)
    if info.sweep_variable is not None and sweep_grid is None:
        raise ConfigError(f"kind {kind!r} requires a [sweep] section with a grid")

    return ExperimentSpec(
        kind=kind,
        params=params,
        cost=cost,
        seed=seed,
        mc_on=mc_on,
        mc_scale=mc_scale,
        sweep_variable=sweep_variable,
        sweep_grid=sweep_grid,
        cases=cases,
        options=options,
        dump_samples=dump_samples,
    )
