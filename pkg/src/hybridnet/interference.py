"""Conditional interference distribution for the thinned co-channel BS field.

The interference seen through nearby scattering IRSs is folded into the mean
relative gain eta_bar; the conditional Laplace transform then takes the form
exp(-2*pi*lambda_B' * U(eta_bar * s)) with a kernel U built from the Gauss
hypergeometric family.  High-order derivatives of U (needed by the
non-outage sum) come from an exact rational-fraction recurrence, and the
conditional cdf from numerical transform inversion.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache

from .model import SystemParams, path_loss_direct
from .signal_power import irs_power_aggregates, kappa_sc
from .specfun import (
    exp_integral,
    falling_factorial,
    gauss_2f1_special,
    inverse_laplace_cdf,
)

MAX_U_DERIVATIVE_ORDER = 16


@dataclass(frozen=True)
class LaplaceContext:
    """Precomputed constants of the conditional interference transform.

    b1 = pi*beta^delta / (alpha*sin(2*pi/alpha)), b2 = (l0^2 + H_B^2)/2,
    b3 = g_d(l0), delta = 2/alpha, and lambda_b_active = p*lambda_B.
    """

    l0: float
    eta_bar: float
    lambda_b_active: float
    delta: float
    b1: float
    b2: float
    b3: float

    def __post_init__(self) -> None:
        if self.eta_bar < 1.0:
            raise ValueError(f"eta_bar must be >= 1 (got {self.eta_bar})")
        if min(self.b1, self.b2, self.b3) <= 0 or not 0 < self.delta < 1:
            raise ValueError("invalid Laplace-transform constants")


def eta_bar(d0: float, params: SystemParams) -> float:
    """Mean IRS scattering gain on interfering links, by association regime."""
    if d0 <= params.D1:
        return kappa_sc(d0, params)
    if d0 <= params.D2:
        e_i1, _, _ = irs_power_aggregates(params.D1, params)
        return 1.0 + params.N * e_i1
    return 1.0


def laplace_context(l0: float, d0: float, params: SystemParams) -> LaplaceContext:
    delta = params.delta
    return LaplaceContext(
        l0=l0,
        eta_bar=eta_bar(d0, params),
        lambda_b_active=params.lambda_B_active,
        delta=delta,
        b1=math.pi * params.beta ** delta / (params.alpha * math.sin(2.0 * math.pi / params.alpha)),
        b2=0.5 * (l0 * l0 + params.H_B ** 2),
        b3=path_loss_direct(l0, params),
    )


# ---------------------------------------------------------------------------
# Kernel U and its derivatives.
#
# U(x) = b1*x^delta - b2*H(x) with H(x) = 2F1(1, delta; 1+delta; -1/(b3*x)).
# The two terms cancel to leading order when w = b3*x is small (the x^delta
# parts are identical by the hypergeometric inversion formula), so for
# |w| <= 0.5 the equivalent alternating series
#     U(x) = b2*delta * sum_{n>=0} (-1)^n w^{n+1} / (n + 1 - delta)
# is used instead; it is exact and free of cancellation.
# ---------------------------------------------------------------------------

_SMALL_W_LIMIT = 0.5
_SERIES_MAX_TERMS = 400


def _u_small_w(w, ctx: LaplaceContext):
    delta = ctx.delta
    acc = 0.0
    power = w
    for n in range(_SERIES_MAX_TERMS):
        contrib = power / (n + 1.0 - delta)
        acc = acc + contrib
        if abs(contrib) <= 1e-17 * abs(acc):
            break
        power = power * (-w)
    return ctx.b2 * delta * acc


def kernel_U(x, ctx: LaplaceContext):
    """Interference propagation kernel; U(0) = 0, nondecreasing on x >= 0.

    Accepts real x >= 0 or complex x with Re(x) >= 0 (transform inversion
    evaluates the Laplace transform on a vertical Bromwich line).
    """
    if x == 0:
        return 0.0
    re = x.real if isinstance(x, complex) else x
    if re < 0:
        raise ValueError(f"kernel_U needs Re(x) >= 0 (got {x!r})")
    w = ctx.b3 * x
    if abs(w) <= _SMALL_W_LIMIT:
        return _u_small_w(w, ctx)
    h = gauss_2f1_special(ctx.delta, -1.0 / w)
    return ctx.b1 * x ** ctx.delta - ctx.b2 * h


@lru_cache(maxsize=64)
def _l_fraction_polynomials(delta: float, order: int) -> tuple[tuple[float, ...], ...]:
    """Numerator polynomials Q_i(t) of the rational fractions L_i.

    With t = b3*x, each L_i(x) = b3 * Q_i(t) / (x^(i-1) * (1+t)^i).  The Q_i
    follow from the first-order relation satisfied by H,
        H'(x) = delta*H/x - delta*b3/(1 + b3*x),
    which gives L_{i+1} = L_i' - delta*(delta)_i*b3/(x^i*(1+b3*x)) and, in
    polynomial form,
        Q_{i+1} = t(1+t) Q_i' + [(1-i) + (1-2i) t] Q_i - delta*(delta)_i (1+t)^i,
    starting from Q_1 = -delta.  Coefficients depend only on delta.
    """
    polys: list[tuple[float, ...]] = [(-delta,)]
    for i in range(1, order):
        q = polys[-1]
        deg = len(q) - 1
        out = [0.0] * (deg + 2)
        # t(1+t) Q'
        for m in range(1, deg + 1):
            out[m] += m * q[m]
            out[m + 1] += m * q[m]
        # [(1-i) + (1-2i) t] Q
        for m in range(deg + 1):
            out[m] += (1.0 - i) * q[m]
            out[m + 1] += (1.0 - 2.0 * i) * q[m]
        # -delta*(delta)_i (1+t)^i
        scale = delta * falling_factorial(delta, i)
        binom = 1.0
        for m in range(i + 1):
            out[m] -= scale * binom
            binom = binom * (i - m) / (m + 1.0)
        polys.append(tuple(out))
    return tuple(polys)


def _eval_poly(coeffs, t):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def l_fraction(x: float, ctx: LaplaceContext, order: int) -> float:
    """Rational fraction L_i(x) of the derivative expansion, i = order >= 1."""
    if order < 1:
        raise ValueError("L fractions start at order 1")
    q = _l_fraction_polynomials(ctx.delta, order)[order - 1]
    t = ctx.b3 * x
    return ctx.b3 * _eval_poly(q, t) / (x ** (order - 1) * (1.0 + t) ** order)


def kernel_U_derivatives(x: float, ctx: LaplaceContext, max_order: int) -> list[float]:
    """Derivatives d^i U / dx^i at x > 0 for i = 1..max_order.

    For |b3*x| <= 0.5 the cancellation-free series for U is differentiated
    term by term; otherwise the closed form
        U^(i) = (delta)_i b1 x^(delta-i) - b2 [ (delta)_i H(x)/x^i + L_i(x) ]
    is used with the recurrence-generated L_i.
    """
    if x <= 0:
        raise ValueError(f"derivatives need x > 0 (got {x})")
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    if max_order > MAX_U_DERIVATIVE_ORDER:
        raise ValueError(
            f"derivative order {max_order} exceeds cap {MAX_U_DERIVATIVE_ORDER}"
        )
    delta = ctx.delta
    w = ctx.b3 * x
    if abs(w) <= _SMALL_W_LIMIT:
        return _u_series_derivatives(x, ctx, max_order)
    h = gauss_2f1_special(delta, -1.0 / w)
    out = []
    for i in range(1, max_order + 1):
        ff = falling_factorial(delta, i)
        out.append(
            ff * ctx.b1 * x ** (delta - i)
            - ctx.b2 * (ff * h / x ** i + l_fraction(x, ctx, i))
        )
    return out


def _u_series_derivatives(x: float, ctx: LaplaceContext, max_order: int) -> list[float]:
    # term-by-term derivative of U = b2*delta*sum (-1)^n w^{n+1}/(n+1-delta):
    # d^i/dx^i w^{n+1} = ff(n+1, i) * w^{n+1} / x^i, so powers of w stay <= 0.5
    delta = ctx.delta
    w = ctx.b3 * x
    out = []
    for i in range(1, max_order + 1):
        acc = 0.0
        sign = (-1.0) ** (i - 1)
        w_pow = w ** i
        for n in range(i - 1, i - 1 + _SERIES_MAX_TERMS):
            contrib = sign * falling_factorial(n + 1.0, i) * w_pow / (n + 1.0 - delta)
            acc += contrib
            sign = -sign
            w_pow *= w
            if abs(contrib) <= 1e-17 * abs(acc) and n >= i + 2:
                break
        out.append(ctx.b2 * delta * acc / x ** i)
    return out


# ---------------------------------------------------------------------------
# Laplace transform, conditional cdf, mean interference.
# ---------------------------------------------------------------------------


def laplace_from_context(s, ctx: LaplaceContext):
    """exp(-2*pi*lambda_B' * U(eta_bar * s)); equals 1 at s = 0."""
    if s == 0:
        return 1.0
    u = kernel_U(ctx.eta_bar * s, ctx)
    exponent = -2.0 * math.pi * ctx.lambda_b_active * u
    return cmath.exp(exponent) if isinstance(exponent, complex) else math.exp(exponent)


def laplace_interference(s, l0: float, d0: float, params: SystemParams):
    """Laplace transform of the conditional interference power at (l0, d0)."""
    re = s.real if isinstance(s, complex) else s
    if re < 0:
        raise ValueError(f"need Re(s) >= 0 (got {s!r})")
    return laplace_from_context(s, laplace_context(l0, d0, params))


def interference_cdf(
    x: float,
    l0: float,
    d0: float,
    params: SystemParams,
    *,
    tol: float = 1e-6,
) -> float:
    """Conditional cdf P{I <= x | l0, d0} via numerical transform inversion."""
    ctx = laplace_context(l0, d0, params)
    return inverse_laplace_cdf(lambda s: laplace_from_context(s, ctx), x, tol=tol)


def mean_direct_interference_conditional(l0: float, params: SystemParams) -> float:
    """E_B1(l0): mean total direct-path interference given the serving distance.

    2*pi*lambda_B'*beta / ((alpha-2) * (l0^2+H_B^2)^(alpha/2-1)).
    """
    return (
        2.0 * math.pi * params.lambda_B_active * params.beta
        / ((params.alpha - 2.0) * (l0 * l0 + params.H_B ** 2) ** (params.alpha / 2.0 - 1.0))
    )


def mean_direct_interference(params: SystemParams) -> float:
    """E_B2 = E{E_B1(l0)} over the serving-link distance, in closed form."""
    x = params.lambda_B * math.pi * params.H_B ** 2
    return (
        (2.0 * math.pi * params.lambda_B_active * params.beta / (params.alpha - 2.0))
        * params.lambda_B
        * math.pi
        * params.H_B ** (4.0 - params.alpha)
        * math.exp(x)
        * exp_integral(params.alpha / 2.0 - 1.0, x)
    )


def mean_interference(
    params: SystemParams,
    l0: float | None = None,
    d0: float | None = None,
) -> float:
    """Mean interference power: conditional on (l0, d0) if both are given,
    otherwise unconditional (1 + N*E_I1(0)) * E_B2."""
    if (l0 is None) != (d0 is None):
        raise ValueError("give both l0 and d0 for the conditional mean, or neither")
    if l0 is not None:
        return eta_bar(d0, params) * mean_direct_interference_conditional(l0, params)
    e_i1_0, _, _ = irs_power_aggregates(0.0, params)
    return (1.0 + params.N * e_i1_0) * mean_direct_interference(params)
