"""Conditional signal-power distribution via moment-matched Gamma laws.

Implements the three association regimes (beamformed, scattered-only,
no-nearby-IRS), the annulus power aggregates over nearby IRSs, the kappa
mean-gain factors, and the unconditional mean signal power.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import channel
from .model import SystemParams, path_loss_direct, path_loss_irs_ue, pdf_d0, regime_probabilities
from .specfun import exp_integral, integrate_adaptive


class MomentError(ArithmeticError):
    """Moment formulas produced an impossible (negative-variance) result.

    Raised instead of clamping: it flags a regime where the stacked
    approximations are invalid and results would be meaningless.
    """


class Regime(enum.Enum):
    BEAMFORMED = "beamformed"
    SCATTERED_ONLY = "scattered"
    NO_IRS = "no_irs"


def classify_regime(d0: float, params: SystemParams) -> Regime:
    """Half-open regime boundaries: d0 <= D1, D1 < d0 <= D2, d0 > D2."""
    if d0 <= params.D1:
        return Regime.BEAMFORMED
    if d0 <= params.D2:
        return Regime.SCATTERED_ONLY
    return Regime.NO_IRS


@dataclass(frozen=True)
class ConditionalMoments:
    """Mean and second moment of the signal power given (l0, d0)."""

    mean: float
    second: float

    def __post_init__(self) -> None:
        if self.variance < 0:
            raise MomentError(
                f"negative variance {self.variance!r} from moments "
                f"(mean={self.mean!r}, second={self.second!r})"
            )

    @property
    def variance(self) -> float:
        return self.second - self.mean * self.mean


@dataclass(frozen=True)
class GammaSpec:
    """Moment-matched Gamma distribution of the conditional signal power."""

    k: float
    theta: float
    regime: Regime
    mean: float
    variance: float

    def __post_init__(self) -> None:
        if self.k <= 0 or self.theta <= 0:
            raise MomentError(f"invalid Gamma parameters k={self.k}, theta={self.theta}")
        if abs(self.k * self.theta - self.mean) > 1e-12 * abs(self.mean):
            raise MomentError("matched mean does not reproduce target mean")
        if abs(self.k * self.theta ** 2 - self.variance) > 1e-12 * abs(self.variance):
            raise MomentError("matched variance does not reproduce target variance")


def irs_power_aggregates(d0: float, params: SystemParams) -> tuple[float, float, float]:
    """(E_I1, E_I2, E_I3): mean sum, mean sum of squares (squared-gain term),
    and mean squared sum of IRS-UE gains over the annulus (d0, D2].

    E_I1(d0) = 2*pi*lambda_I*beta/(alpha-2) * [(d0^2+H_I^2)^(1-alpha/2)
               - (D2^2+H_I^2)^(1-alpha/2)], E_I3 = E_I1^2 + E_I2.
    """
    if d0 < 0 or d0 > params.D2:
        raise ValueError(f"d0 must lie in [0, D2] (got {d0})")
    beta, alpha = params.beta, params.alpha
    hi2 = params.H_I ** 2
    inner = d0 * d0 + hi2
    outer = params.D2 ** 2 + hi2
    e_i1 = (2.0 * math.pi * params.lambda_I * beta / (alpha - 2.0)) * (
        inner ** (1.0 - alpha / 2.0) - outer ** (1.0 - alpha / 2.0)
    )
    e_i2 = (math.pi * params.lambda_I * beta ** 2 / (alpha - 1.0)) * (
        inner ** (1.0 - alpha) - outer ** (1.0 - alpha)
    )
    return e_i1, e_i2, e_i1 * e_i1 + e_i2


def kappa_bf(d0: float, params: SystemParams, n_elements: int | None = None) -> float:
    """Mean signal gain factor with reflect beamforming from the nearest IRS.

    kappa_bf = 1 + G_bf*g_r(d0) + N*(pi/4)*sqrt(pi*g_r(d0)) + N*E_I1(d0).
    ``n_elements`` overrides params.N for diagnostics.
    """
    n = params.N if n_elements is None else n_elements
    g_bf, _ = channel.gain_coefficients(n)
    gr = path_loss_irs_ue(d0, params)
    e_i1, _, _ = irs_power_aggregates(d0, params)
    return 1.0 + g_bf * gr + n * (math.pi / 4.0) * math.sqrt(math.pi * gr) + n * e_i1


def kappa_sc(d0: float, params: SystemParams, n_elements: int | None = None) -> float:
    """Mean signal gain factor with random scattering only.

    kappa_sc = 1 + N*g_r(d0) + N*E_I1(d0).
    """
    n = params.N if n_elements is None else n_elements
    gr = path_loss_irs_ue(d0, params)
    e_i1, _, _ = irs_power_aggregates(d0, params)
    return 1.0 + n * gr + n * e_i1


def conditional_moments(l0: float, d0: float, params: SystemParams) -> ConditionalMoments:
    """First two moments of the conditional signal power S | (l0, d0)."""
    regime = classify_regime(d0, params)
    gd = path_loss_direct(l0, params)
    if regime is Regime.BEAMFORMED:
        mom = channel.cascade_moments_bf(l0, d0, params)
        mean = mom.m1_h1sq + mom.m1_h2sq
        second = mom.m2_h1sq + mom.m2_h2sq + 4.0 * mom.m1_h1sq * mom.m1_h2sq
    elif regime is Regime.SCATTERED_ONLY:
        n = float(params.N)
        e_i1, _, e_i3 = irs_power_aggregates(params.D1, params)
        mean = gd * (1.0 + n * e_i1)
        second = 2.0 * gd * gd * (1.0 + 2.0 * n * e_i1 + n * n * e_i3)
    else:
        mean = gd
        second = 2.0 * gd * gd
    return ConditionalMoments(mean=mean, second=second)


def signal_gamma_spec(l0: float, d0: float, params: SystemParams) -> GammaSpec:
    """Moment-matched Gamma law of S | (l0, d0) for the regime selected by d0.

    Without any nearby IRS the signal power is exactly exponential, so the
    shape is pinned to 1 instead of being re-derived from the moments.
    """
    regime = classify_regime(d0, params)
    moments = conditional_moments(l0, d0, params)
    if regime is Regime.NO_IRS:
        gd = path_loss_direct(l0, params)
        return GammaSpec(k=1.0, theta=gd, regime=regime, mean=gd, variance=gd * gd)
    mean, var = moments.mean, moments.variance
    if var <= 0:
        raise MomentError(f"degenerate variance {var!r} at l0={l0}, d0={d0}")
    return GammaSpec(
        k=mean * mean / var,
        theta=var / mean,
        regime=regime,
        mean=mean,
        variance=var,
    )


def mean_direct_gain(params: SystemParams) -> float:
    """Mean serving-link gain E{g_d(l0)} over the nearest-BS distance.

    Closed form beta*lambda_B*pi*H_B^(2-alpha) * e^x * E_{alpha/2}(x) with
    x = lambda_B*pi*H_B^2.
    """
    x = params.lambda_B * math.pi * params.H_B ** 2
    return (
        params.beta
        * params.lambda_B
        * math.pi
        * params.H_B ** (2.0 - params.alpha)
        * math.exp(x)
        * exp_integral(params.alpha / 2.0, x)
    )


def mean_signal_power(params: SystemParams) -> float:
    """Unconditional mean signal power, all regimes weighted by occurrence.

    E{S} = E_B0 * [ int_0^D1 kappa_bf(u) f_d0(u) du
                    + P_sc * (1 + N*E_I1(D1)) + P_wo ].
    """
    probs = regime_probabilities(params)
    e_b0 = mean_direct_gain(params)
    if params.lambda_I == 0.0:
        return e_b0
    bf_term = integrate_adaptive(
        lambda u: kappa_bf(u, params) * pdf_d0(u, params),
        0.0,
        params.D1,
        abs_tol=1e-12,
        rel_tol=1e-10,
    )
    e_i1_d1, _, _ = irs_power_aggregates(params.D1, params)
    sc_term = probs.p_sc * (1.0 + params.N * e_i1_d1)
    return e_b0 * (bf_term + sc_term + probs.p_wo)
