"""Per-link fading statistics and cascaded BS-IRS-UE channel moments.

Covers double-Rayleigh element statistics, the normal approximation of the
beamformed cascaded amplitude, the CSCG approximation of the randomly
scattered aggregate, and the conditional moments of the combined signal
channel components used for Gamma moment matching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SystemParams, path_loss_direct, path_loss_irs_ue

_PI2_16 = math.pi ** 2 / 16.0


@dataclass(frozen=True)
class ElementStats:
    """Amplitude statistics of one reflected element path.

    For independent Rayleigh hops with mean power gains g_i (BS-IRS) and
    g_r (IRS-UE), the product amplitude has mean (pi/4)*sqrt(g_i*g_r) and
    variance (1 - pi^2/16)*g_i*g_r.
    """

    mean_amp: float
    var_amp: float
    g_i: float
    g_r: float


def element_stats(g_i: float, g_r: float) -> ElementStats:
    if g_i <= 0 or g_r <= 0:
        raise ValueError("mean power gains must be positive")
    prod = g_i * g_r
    return ElementStats(
        mean_amp=(math.pi / 4.0) * math.sqrt(prod),
        var_amp=(1.0 - _PI2_16) * prod,
        g_i=g_i,
        g_r=g_r,
    )


def gain_coefficients(n_elements: int) -> tuple[float, float]:
    """Channel power gain coefficients (beamformed, scattered) for N elements.

    G_bf = (pi^2/16) N^2 + (1 - pi^2/16) N grows as O(N^2); G_sc = N.
    """
    n = float(n_elements)
    return _PI2_16 * n * n + (1.0 - _PI2_16) * n, n


def beamformed_amplitude_stats(g_i: float, g_r: float, n_elements: int) -> tuple[float, float]:
    """(mean, variance) of the co-phased N-element cascaded amplitude.

    The sum of N i.i.d. double-Rayleigh amplitudes; its second moment equals
    G_bf * g_i * g_r exactly.
    """
    per = element_stats(g_i, g_r)
    return n_elements * per.mean_amp, n_elements * per.var_amp


def element_component_variance(g_i: float, g_r: float) -> float:
    """Variance of the in-phase (or quadrature) part of one scattered element."""
    return 0.5 * g_i * g_r


def scattered_channel_variance(g_i: float, g_r: float, n_elements: int) -> float:
    """Variance N*g_i*g_r of the zero-mean scattered N-element aggregate."""
    return n_elements * g_i * g_r


@dataclass(frozen=True)
class CascadeMoments:
    """First/second moments of |h1|^2 and |h2|^2 given (l0, d0).

    h1 is the co-phased direct + associated-IRS channel, h2 the aggregate
    scattered through the remaining nearby IRSs.
    """

    m1_h1sq: float
    m2_h1sq: float
    m1_h2sq: float
    m2_h2sq: float

    def __post_init__(self) -> None:
        for v in (self.m1_h1sq, self.m2_h1sq, self.m1_h2sq, self.m2_h2sq):
            if v < 0:
                raise ValueError(f"moments must be nonnegative (got {v})")


def cascade_moments_bf(l0: float, d0: float, params: SystemParams) -> CascadeMoments:
    """Closed-form conditional moments in the beamformed regime (d0 <= D1).

    Uses the local-IRS approximation that each nearby BS-IRS gain equals the
    BS-UE gain at l0.  The fourth moment of |h1| follows the normal-moment
    expansion of the co-phased amplitude sum.
    """
    if d0 > params.D1:
        raise ValueError(f"beamformed moments need d0 <= D1 (got d0={d0}, D1={params.D1})")
    from .signal_power import irs_power_aggregates  # cyclic at import time only

    n = float(params.N)
    g_bf, _ = gain_coefficients(params.N)
    gd = path_loss_direct(l0, params)
    gr = path_loss_irs_ue(d0, params)
    e_i1, _, e_i3 = irs_power_aggregates(d0, params)

    sqrt_gr = math.sqrt(gr)
    m1_h1sq = gd * (1.0 + n * (math.pi / 4.0) * math.sqrt(math.pi * gr) + g_bf * gr)
    c = 1.0 - _PI2_16
    m2_h1sq = gd * gd * (
        2.0
        + 0.75 * math.pi ** 1.5 * n * sqrt_gr
        + 6.0 * g_bf * gr
        + 2.0 * math.sqrt(math.pi)
        * (math.pi ** 3 * n ** 3 / 64.0 + 0.75 * math.pi * n * n * c)
        * gr * sqrt_gr
        + (math.pi ** 4 * n ** 4 / 256.0 + 0.375 * math.pi ** 2 * n ** 3 * c + 3.0 * n * n * c * c)
        * gr * gr
    )
    m1_h2sq = n * gd * e_i1
    m2_h2sq = 2.0 * n * n * gd * gd * e_i3
    return CascadeMoments(m1_h1sq, m2_h1sq, m1_h2sq, m2_h2sq)


# ---------------------------------------------------------------------------
# Fading samplers (unit mean power).  One independent numpy Generator per
# concurrent task; callers seed streams as (master seed, task index).
# ---------------------------------------------------------------------------

RAYLEIGH_SCALE = 1.0 / math.sqrt(2.0)


def sample_fading_rayleigh(rng: np.random.Generator, size=None):
    """Rayleigh amplitude with E{amp^2} = 1 (scale 1/sqrt(2))."""
    return rng.rayleigh(scale=RAYLEIGH_SCALE, size=size)


def sample_fading_double_rayleigh(rng: np.random.Generator, size=None):
    """Product of two independent unit-power Rayleigh amplitudes."""
    return rng.rayleigh(scale=RAYLEIGH_SCALE, size=size) * rng.rayleigh(
        scale=RAYLEIGH_SCALE, size=size
    )


def sample_uniform_phase(rng: np.random.Generator, size=None):
    """Phase uniform on [0, 2*pi)."""
    return rng.uniform(0.0, 2.0 * math.pi, size=size)
