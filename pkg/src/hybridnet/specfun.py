"""Numerical kernels used by the closed forms.

Provides the exponential integral E_nu, the Gauss hypergeometric family
2F1(1, d; 1+d; z) on the closed left half-plane, the upper incomplete gamma
function (series + continued fraction), complete Bell polynomials, falling
factorials, an Abate--Whitt Euler-summation inverse Laplace transform for
probability cdfs, and adaptive quadrature with user breakpoints.
"""

from __future__ import annotations

import math
from math import comb

import mpmath
import scipy.integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best estimate and its error bound.
    """

    def __init__(self, message: str, value: float, error_bound: float):
        super().__init__(f"{message} (best estimate {value!r}, error bound {error_bound:.3e})")
        self.value = value
        self.error_bound = error_bound


class LaplaceInversionError(RuntimeError):
    """Euler-summation tail estimate exceeded the requested tolerance."""

    def __init__(self, message: str, value: float, tail_estimate: float):
        super().__init__(f"{message} (value {value!r}, tail estimate {tail_estimate:.3e})")
        self.value = value
        self.tail_estimate = tail_estimate


def falling_factorial(delta: float, i: int) -> float:
    """(delta)_i = delta*(delta-1)*...*(delta-i+1), with (delta)_0 = 1."""
    if i < 0:
        raise ValueError(f"order must be nonnegative (got {i})")
    out = 1.0
    for j in range(i):
        out *= delta - j
    return out


def complete_bell(derivatives) -> float:
    """Complete Bell polynomial B_i(x_1, ..., x_i) of the given argument list.

    Uses the recurrence B_{i+1} = sum_j C(i, j) B_{i-j} x_{j+1} with B_0 = 1.
    Works for any numeric type supporting + and * (floats, Fractions).
    """
    xs = list(derivatives)
    if not xs:
        raise ValueError("need at least one derivative value")
    bell = [xs[0] * 0 + 1]  # B_0 = 1 in the argument's arithmetic
    for i in range(len(xs)):
        nxt = sum(comb(i, j) * bell[i - j] * xs[j] for j in range(i + 1))
        bell.append(nxt)
    return bell[len(xs)]


def exp_integral(nu: float, x: float) -> float:
    """Exponential integral E_nu(x) = int_1^inf exp(-x t) t^-nu dt for x > 0.

    Computed through E_nu(x) = x**(nu-1) * Gamma(1-nu, x), which is valid for
    any real order, including the non-integer orders alpha/2 and alpha/2 - 1.
    """
    if x <= 0:
        raise ValueError(f"exp_integral requires x > 0 (got {x})")
    value = mpmath.power(x, nu - 1.0) * mpmath.gammainc(1.0 - nu, x)
    return float(value)


# ---------------------------------------------------------------------------
# Gauss hypergeometric 2F1(1, delta; 1+delta; z), Re(z) <= 0, 0 < delta < 1.
#
# Three convergent routes, selected by |z|:
#   |z| <  0.5 : defining power series  sum_n delta/(delta+n) z^n
#   |z| <= 2.0 : Pfaff transform        (1-z)^-1 2F1(1, 1; 1+delta; z/(z-1))
#   |z| >  2.0 : inversion z -> 1/z     (keeps the series argument small even
#                                        for |z| ~ 1e6 where Pfaff stalls)
# ---------------------------------------------------------------------------

_F21_MAX_TERMS = 4000
_F21_EPS = 1e-16


def _f21_base_series(delta, z):
    # sum_n delta/(delta+n) z^n; geometric tail ratio |z|
    term = 1.0
    acc = 1.0
    for n in range(1, _F21_MAX_TERMS):
        term = term * z
        contrib = delta / (delta + n) * term
        acc = acc + contrib
        if abs(contrib) <= _F21_EPS * abs(acc):
            return acc
    raise ArithmeticError(f"2F1 series did not converge at z={z!r}")


def _f21_pfaff(delta, z):
    # 2F1(1, delta; 1+delta; z) = (1-z)^-1 2F1(1, 1; 1+delta; w), w = z/(z-1)
    w = z / (z - 1.0)
    coeff = 1.0
    acc = 1.0
    for n in range(1, _F21_MAX_TERMS):
        coeff = coeff * (n / (n + delta)) * w
        acc = acc + coeff
        if abs(coeff) <= _F21_EPS * abs(acc):
            return acc / (1.0 - z)
    raise ArithmeticError(f"2F1 Pfaff series did not converge at z={z!r}")


def _f21_inversion(delta, z):
    # DLMF 15.8.2 specialized to (1, delta; 1+delta):
    #   F = delta*pi/sin(pi*delta) * (-z)^-delta
    #       - delta/(1-delta) * (-z)^-1 * 2F1(1, 1-delta; 2-delta; 1/z)
    # and the rightmost factor is the same family at order 1-delta.
    mz = -z
    head = delta * math.pi / math.sin(math.pi * delta) * mz ** (-delta)
    tail = delta / (1.0 - delta) * _f21_base_series(1.0 - delta, 1.0 / z) / mz
    return head - tail


def gauss_2f1_special(delta: float, z):
    """2F1(1, delta; 1+delta; z) for 0 < delta < 1 and Re(z) <= 0.

    Real z in gives a float back; complex z (needed when the interference
    Laplace transform is evaluated on Bromwich abscissae) gives complex.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1) (got {delta})")
    re = z.real if isinstance(z, complex) else z
    if re > 0.0:
        raise ValueError(f"argument must satisfy Re(z) <= 0 (got {z!r})")
    if z == 0:
        return 1.0
    az = abs(z)
    if az < 0.5:
        return _f21_base_series(delta, z)
    if az <= 2.0:
        return _f21_pfaff(delta, z)
    return _f21_inversion(delta, z)


# ---------------------------------------------------------------------------
# Upper incomplete gamma, series / continued-fraction split (NR style).
# ---------------------------------------------------------------------------

_GAMMA_EPS = 1e-15
_GAMMA_MAX_ITER = 500


def _lower_regularized_series(k: float, x: float) -> float:
    # P(k, x) by the ascending series; preferred for x < k + 1
    if x == 0.0:
        return 0.0
    ap = k
    delta = 1.0 / k
    total = delta
    for _ in range(_GAMMA_MAX_ITER):
        ap += 1.0
        delta *= x / ap
        total += delta
        if abs(delta) < abs(total) * _GAMMA_EPS:
            return total * math.exp(-x + k * math.log(x) - math.lgamma(k))
    raise ArithmeticError(f"incomplete gamma series stalled at k={k}, x={x}")


def _upper_regularized_contfrac(k: float, x: float) -> float:
    # Q(k, x) by the Lentz continued fraction; preferred for x >= k + 1
    tiny = 1e-300
    b = x + 1.0 - k
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _GAMMA_MAX_ITER):
        an = -i * (i - k)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _GAMMA_EPS:
            return math.exp(-x + k * math.log(x) - math.lgamma(k)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction stalled at k={k}, x={x}")


def upper_incomplete_gamma(k: float, x: float, method: str | None = None) -> float:
    """Unregularized upper incomplete gamma Gamma(k, x), k > 0, x >= 0.

    ``method`` forces 'series' or 'contfrac' (both routes cover all inputs);
    by default the numerically favorable one is picked at x = k + 1.
    """
    if k <= 0:
        raise ValueError(f"shape must be positive (got {k})")
    if x < 0:
        raise ValueError(f"argument must be nonnegative (got {x})")
    gamma_k = math.gamma(k)
    if x == 0.0:
        return gamma_k
    if method is None:
        method = "series" if x < k + 1.0 else "contfrac"
    if method == "series":
        return gamma_k * (1.0 - _lower_regularized_series(k, x))
    if method == "contfrac":
        return gamma_k * _upper_regularized_contfrac(k, x)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Inverse Laplace transform of a probability cdf (Abate--Whitt Euler method).
# ---------------------------------------------------------------------------


def inverse_laplace_cdf(
    laplace,
    x: float,
    *,
    tol: float = 1e-6,
    pre_terms: int = 15,
    euler_terms: int = 11,
    decay: float = 18.4,
    max_refinements: int = 2,
) -> float:
    """Cdf value F(x) = Linv[L(s)/s](x) of a density with Laplace transform L.

    Euler-summation inversion: the Bromwich integral is discretized on the
    vertical line Re(s) = decay/(2x) (discretization error ~ exp(-decay)) and
    the alternating series is accelerated with binomially weighted partial
    sums s_n, n = pre_terms .. pre_terms + euler_terms.  The difference
    between the last two weighted averages estimates the remaining tail; if
    it exceeds ``tol`` the window is pushed deeper into the series (at most
    ``max_refinements`` doublings) before the inversion is reported as
    non-convergent.

    The result is clamped to [0, 1] only after the tolerance check.
    """
    if x <= 0:
        raise ValueError(f"cdf inversion requires x > 0 (got {x})")
    base = math.exp(decay / 2.0) / x
    s0 = decay / (2.0 * x)
    running = 0.5 * base * complex(laplace(s0) / s0).real
    partials: list[float] = []

    def extend_to(n: int) -> None:
        nonlocal running
        for k in range(len(partials) + 1, n + 1):
            s = complex(decay, 2.0 * math.pi * k) / (2.0 * x)
            running += (-1.0) ** k * base * (laplace(s) / s).real
            partials.append(running)

    def euler_avg(start: int, order: int) -> float:
        scale = 2.0 ** (-order)
        return scale * sum(
            comb(order, j) * partials[start - 1 + j] for j in range(order + 1)
        )

    start = pre_terms
    value = math.nan
    tail = math.inf
    for _ in range(max_refinements + 1):
        extend_to(start + euler_terms)
        value = euler_avg(start, euler_terms)
        tail = abs(value - euler_avg(start, euler_terms - 1))
        if math.isfinite(value) and tail <= tol:
            return min(1.0, max(0.0, value))
        start *= 2
    raise LaplaceInversionError(
        f"Euler summation did not converge at x={x!r}", value, tail
    )


# ---------------------------------------------------------------------------
# Adaptive quadrature with breakpoints, finite or semi-infinite ranges.
# ---------------------------------------------------------------------------


def integrate_adaptive(
    f,
    a: float,
    b: float,
    *,
    abs_tol: float = 1e-10,
    rel_tol: float = 1e-8,
    breakpoints=(),
    limit: int = 200,
) -> float:
    """Integral of ``f`` over (a, b) with b possibly +inf.

    ``breakpoints`` are interior abscissae where the integrand is allowed to
    be non-smooth (regime boundaries); the range is split there and each
    piece is handled by adaptive Gauss--Kronrod quadrature (semi-infinite
    tails via scipy's rational substitution).  Raises QuadratureError with
    the best estimate if the accumulated error bound misses the tolerance.
    """
    if b <= a:
        raise ValueError(f"need a < b (got a={a}, b={b})")
    cuts = sorted(p for p in breakpoints if a < p < b)
    edges = [a, *cuts, b]
    total = 0.0
    err = 0.0
    pieces = len(edges) - 1
    for lo, hi in zip(edges[:-1], edges[1:]):
        piece = scipy.integrate.quad(
            f, lo, hi,
            epsabs=abs_tol / pieces,
            epsrel=rel_tol,
            limit=limit,
            full_output=1,
        )
        total += piece[0]
        err += piece[1]
    if err > max(abs_tol, rel_tol * abs(total)):
        raise QuadratureError(
            f"quadrature over ({a}, {b}) missed tolerance", total, err
        )
    return total
