"""System parameters, path-loss laws, link-distance distributions, regime
probabilities, and the deployment cost model for the hybrid BS/IRS network."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

#: Reference BS/IRS density (per m^2); densities in experiment grids are
#: usually expressed as multiples of this value.
LAMBDA0 = 5e-6


class ParameterError(ValueError):
    """Invalid or mutually inconsistent system parameters."""


@dataclass(frozen=True)
class SystemParams:
    """All network and propagation constants.

    Distances are in meters, densities in 1/m^2, frequencies in Hz.  The
    noise level ``W`` is the noise-to-transmit-power ratio (linear, not dB)
    and the SINR threshold ``gamma_bar`` is linear as well.  Exactly one of
    ``gamma_bar`` / ``R_bar`` may be given; the other is derived from
    ``gamma_bar = 2**R_bar - 1``.
    """

    lambda_B: float = 10 * LAMBDA0
    lambda_I: float = 10 * LAMBDA0
    p: float = 0.5
    N: int = 2000
    H_B: float = 20.0
    H_I: float = 1.0
    alpha: float = 3.0
    f_c: float = 2e9
    D1: float = 25.0
    D2: float = 50.0
    W: float = 10 ** (-14.7)
    gamma_bar: float | None = None
    R_bar: float | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 2:
            raise ParameterError(
                f"alpha must be strictly greater than 2 (got {self.alpha}); "
                "the closed forms carry 1/(alpha-2) factors"
            )
        if self.H_B < 1 or self.H_I < 1:
            raise ParameterError("H_B and H_I must be at least 1 m (far field)")
        if not 0 < self.D1 < self.D2:
            raise ParameterError(f"need 0 < D1 < D2 (got D1={self.D1}, D2={self.D2})")
        if not 0 < self.p <= 1:
            raise ParameterError(f"loading factor p must be in (0, 1] (got {self.p})")
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be a positive integer (got {self.N})")
        if self.lambda_B <= 0 or self.lambda_I < 0:
            raise ParameterError("lambda_B must be positive and lambda_I nonnegative")
        if self.W <= 0 or self.f_c <= 0:
            raise ParameterError("W and f_c must be positive")

        gamma_bar, r_bar = self.gamma_bar, self.R_bar
        if gamma_bar is None and r_bar is None:
            r_bar = 1.0
        if r_bar is None:
            r_bar = math.log2(1.0 + gamma_bar)
        elif gamma_bar is None:
            gamma_bar = 2.0 ** r_bar - 1.0
        elif abs(gamma_bar - (2.0 ** r_bar - 1.0)) > 1e-9 * max(1.0, gamma_bar):
            raise ParameterError(
                f"gamma_bar={gamma_bar} inconsistent with R_bar={r_bar} "
                "(need gamma_bar = 2**R_bar - 1)"
            )
        if gamma_bar <= 0:
            raise ParameterError("gamma_bar must be positive")
        object.__setattr__(self, "gamma_bar", float(gamma_bar))
        object.__setattr__(self, "R_bar", float(r_bar))

    @property
    def beta(self) -> float:
        """Mean channel power gain at 1 m: (4*pi*f_c/c)**-2."""
        return (SPEED_OF_LIGHT / (4.0 * math.pi * self.f_c)) ** 2

    @property
    def lambda_B_active(self) -> float:
        """Density of co-channel (active) BSs, p * lambda_B."""
        return self.p * self.lambda_B

    @property
    def delta(self) -> float:
        """Path-loss shape exponent 2/alpha, in (0, 1)."""
        return 2.0 / self.alpha


@dataclass(frozen=True)
class RegimeProbabilities:
    """Occurrence probabilities of the three association regimes."""

    p_bf: float
    p_sc: float
    p_wo: float

    def __post_init__(self) -> None:
        for v in (self.p_bf, self.p_sc, self.p_wo):
            if not -1e-12 <= v <= 1 + 1e-12:
                raise ParameterError(f"regime probability {v} outside [0, 1]")
        if abs(self.p_bf + self.p_sc + self.p_wo - 1.0) > 1e-12:
            raise ParameterError("regime probabilities must sum to 1")


@dataclass(frozen=True)
class CostModel:
    """Per-unit deployment costs: BS cost ``c0`` and BS/IRS cost ratio ``K_N``.

    Total cost per m^2 at BS density lambda_B and IRS/BS density ratio zeta
    is C = lambda_B * c0 * (1 + zeta / K_N).
    """

    c0: float = 1.0
    K_N: float = 5.0

    def __post_init__(self) -> None:
        if self.c0 <= 0 or self.K_N <= 0:
            raise ParameterError("c0 and K_N must be positive")

    def total_cost(self, lambda_B: float, zeta: float) -> float:
        return lambda_B * self.c0 * (1.0 + zeta / self.K_N)


def path_loss_direct(l, params: SystemParams):
    """Mean BS-UE power gain beta*(l^2 + H_B^2)**(-alpha/2); array friendly."""
    return params.beta * (l * l + params.H_B ** 2) ** (-params.alpha / 2.0)


def path_loss_irs_ue(d, params: SystemParams):
    """Mean IRS-UE power gain beta*(d^2 + H_I^2)**(-alpha/2)."""
    return params.beta * (d * d + params.H_I ** 2) ** (-params.alpha / 2.0)


def path_loss_bs_irs(r, params: SystemParams):
    """Mean BS-IRS per-element power gain beta*(r^2 + (H_B - H_I)^2)**(-alpha/2)."""
    return params.beta * (r * r + (params.H_B - params.H_I) ** 2) ** (-params.alpha / 2.0)


def pdf_l0(l, params: SystemParams):
    """Density of the nearest-BS distance: 2*pi*lambda_B*l*exp(-lambda_B*pi*l^2)."""
    lam = params.lambda_B
    return 2.0 * math.pi * lam * l * np.exp(-lam * math.pi * l * l)


def pdf_d0(d, params: SystemParams):
    """Density of the nearest-IRS distance: 2*pi*lambda_I*d*exp(-lambda_I*pi*d^2)."""
    lam = params.lambda_I
    return 2.0 * math.pi * lam * d * np.exp(-lam * math.pi * d * d)


def regime_probabilities(params: SystemParams) -> RegimeProbabilities:
    """Probabilities of beamformed / scattered-only / no-nearby-IRS association."""
    q1 = math.exp(-params.lambda_I * math.pi * params.D1 ** 2)
    q2 = math.exp(-params.lambda_I * math.pi * params.D2 ** 2)
    return RegimeProbabilities(p_bf=1.0 - q1, p_sc=q1 - q2, p_wo=q2)


def cost_to_density(total_cost: float, zeta: float, cost_model: CostModel) -> tuple[float, float]:
    """Invert the cost model: densities (lambda_B, lambda_I) for a budget.

    lambda_B = C / (c0 * (1 + zeta/K_N)) and lambda_I = zeta * lambda_B.
    """
    if total_cost <= 0:
        raise ParameterError(f"total cost must be positive (got {total_cost})")
    if zeta < 0:
        raise ParameterError(f"zeta must be nonnegative (got {zeta})")
    lambda_b = total_cost / (cost_model.c0 * (1.0 + zeta / cost_model.K_N))
    return lambda_b, zeta * lambda_b


#: Keys accepted in flat parameter config files.  W is given in dB in files
#: and stored linear; c0/K_N feed the cost model.
PARAM_KEYS = (
    "lambda_B", "lambda_I", "p", "N", "H_B", "H_I", "alpha", "f_c",
    "D1", "D2", "W_dB", "R_bar", "c0", "K_N",
)


def params_from_mapping(mapping: dict) -> tuple[SystemParams, CostModel]:
    """Build (SystemParams, CostModel) from a flat key/value mapping.

    Unknown keys raise ParameterError so config typos fail loudly.
    """
    unknown = set(mapping) - set(PARAM_KEYS)
    if unknown:
        raise ParameterError(
            f"unknown parameter keys {sorted(unknown)}; valid keys: {', '.join(PARAM_KEYS)}"
        )
    kwargs = {}
    for key in ("lambda_B", "lambda_I", "p", "H_B", "H_I", "alpha", "f_c", "D1", "D2", "R_bar"):
        if key in mapping:
            kwargs[key] = float(mapping[key])
    if "N" in mapping:
        kwargs["N"] = int(float(mapping["N"]))
    if "W_dB" in mapping:
        kwargs["W"] = 10.0 ** (float(mapping["W_dB"]) / 10.0)
    params = SystemParams(**kwargs)
    cost = CostModel(
        c0=float(mapping.get("c0", 1.0)),
        K_N=float(mapping.get("K_N", 5.0)),
    )
    return params, cost


def load_params(path) -> tuple[SystemParams, CostModel]:
    """Load parameters from a flat ``key = value`` file (comments with '#')."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            mapping[key] = value
    return params_from_mapping(mapping)
