"""Self-contained real-valued special functions.

Everything here is pure-Python/math on scalars: the Bessel kernel that
drives the port correlation model, the gamma family used by the coverage
and rate expressions, and a Gauss hypergeometric evaluator that stays
accurate for the very negative arguments produced by strongly correlated
port pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SERIES_CAP = 10_000
SERIES_RTOL = 1e-16

# power series below this |x|, quadrature of the cosine integral above
_J0_SERIES_CUTOFF = 12.0
_J0_QUAD_NODES = 96


@dataclass(frozen=True)
class SpecFunResult:
    """Evaluation outcome of an iteratively computed special function.

    ``value`` must not be consumed when ``converged`` is False.
    """

    value: float
    converged: bool
    terms_used: int


class DomainError(ValueError):
    """Argument outside the supported domain of a special function."""


def bessel_j0(x: float) -> float:
    """Bessel function J0(x) (first kind, order zero).

    Power series up to |x| = 12; beyond that the series suffers from
    catastrophic cancellation and the divergent asymptotic tail cannot
    reach 1e-12 either, so the oscillatory integral
    (1/pi) * int_0^pi cos(x sin t) dt is evaluated by the midpoint rule,
    which is spectrally accurate for this periodic integrand.
    """
    if not math.isfinite(x):
        raise DomainError(f"bessel_j0 requires finite x, got {x!r}")
    x = abs(x)
    if x <= _J0_SERIES_CUTOFF:
        # sum (-x^2/4)^k / (k!)^2
        q = -0.25 * x * x
        term = 1.0
        total = 1.0
        for k in range(1, 200):
            term *= q / (k * k)
            total += term
            if abs(term) <= SERIES_RTOL * abs(total):
                break
        return total
    n = _J0_QUAD_NODES
    t = [(j + 0.5) * math.pi / n for j in range(n)]
    return sum(math.cos(x * math.sin(tj)) for tj in t) / n


_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Gamma function on the real line (Lanczos approximation, g = 7).

    Poles at non-positive integers raise ``DomainError``.
    """
    if not math.isfinite(x):
        raise DomainError(f"gamma_fn requires finite x, got {x!r}")
    if x <= 0 and x == math.floor(x):
        raise DomainError(f"gamma_fn pole at non-positive integer x = {x}")
    if x < 0.5:
        # reflection: Gamma(x) * Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    a = _LANCZOS_C[0]
    for i in range(1, len(_LANCZOS_C)):
        a += _LANCZOS_C[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * a


def _lower_reg_series(m: float, x: float) -> float:
    # P(m, x) by its ascending series; reliable for x < m + 1
    term = 1.0 / m
    total = term
    for k in range(1, SERIES_CAP):
        term *= x / (m + k)
        total += term
        if term <= SERIES_RTOL * total:
            break
    log_pref = m * math.log(x) - x - math.lgamma(m)
    return total * math.exp(log_pref)


def _upper_reg_cf(m: float, x: float) -> float:
    # Q(m, x) by the continued fraction (modified Lentz), for x >= m + 1
    tiny = 1e-300
    b = x + 1.0 - m
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, SERIES_CAP):
        an = -i * (i - m)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < SERIES_RTOL:
            break
    log_pref = m * math.log(x) - x - math.lgamma(m)
    return math.exp(log_pref) * h


def upper_gamma_reg(m: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(m, x) = Gamma(m, x) / Gamma(m)."""
    if not (m > 0):
        raise DomainError(f"upper_gamma_reg requires m > 0, got m = {m}")
    if not (x >= 0):
        raise DomainError(f"upper_gamma_reg requires x >= 0, got x = {x}")
    if x == 0.0:
        return 1.0
    if x < m + 1.0:
        return 1.0 - _lower_reg_series(m, x)
    return _upper_reg_cf(m, x)


def _gauss_series(a: float, b: float, c: float, z: float) -> SpecFunResult:
    term = 1.0
    total = 1.0
    for k in range(SERIES_CAP):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        total += term
        if abs(term) <= SERIES_RTOL * abs(total):
            return SpecFunResult(total, True, k + 1)
    return SpecFunResult(total, False, SERIES_CAP)


def _is_nonpositive_int(x: float, tol: float = 1e-12) -> bool:
    return x <= tol and abs(x - round(x)) < tol


def hyp2f1(a: float, b: float, c: float, z: float) -> SpecFunResult:
    """Gauss hypergeometric 2F1(a, b; c; z) on the real axis, z <= 1.

    Strategy: the Gauss series where it converges quickly (|z| <= 0.5),
    the Pfaff transform z -> z/(z-1) for moderately negative z, and the
    1/z connection formula for large negative z.  The connection formula
    degenerates when b - a is an integer; the Pfaff route covers every
    such case this package exercises.
    """
    if _is_nonpositive_int(c):
        raise DomainError(f"hyp2f1 undefined for non-positive integer c = {c}")
    if z > 1.0:
        raise DomainError(f"hyp2f1 supports z <= 1 only, got z = {z}")
    if z == 0.0:
        return SpecFunResult(1.0, True, 0)
    if a == 0.0 or b == 0.0:
        return SpecFunResult(1.0, True, 0)
    # terminating series (a or b a non-positive integer) is always safe
    if _is_nonpositive_int(a) or _is_nonpositive_int(b):
        return _gauss_series(a, b, c, z)
    # degenerate upper parameter: 2F1(a, b; a; z) = (1-z)^(-b)
    if abs(c - a) < 1e-12:
        return SpecFunResult((1.0 - z) ** (-b), True, 0)
    if abs(c - b) < 1e-12:
        return SpecFunResult((1.0 - z) ** (-a), True, 0)
    if -0.5 <= z < 0.95:
        return _gauss_series(a, b, c, z)
    if z >= 0.95:
        # map close-to-1 arguments away from the branch point
        inner = hyp2f1(a, c - b, c, z / (z - 1.0))
        value = (1.0 - z) ** (-a) * inner.value
        return SpecFunResult(value, inner.converged, inner.terms_used)
    # z < -0.5 from here on
    ba = b - a
    ba_is_int = abs(ba - round(ba)) < 1e-8
    if z <= -8.0 and not ba_is_int:
        return _connection_large_negative(a, b, c, z)
    # Pfaff: argument z/(z-1) lies in (0.5, 1) and shrinks toward 8/9
    inner = _gauss_series(a, c - b, c, z / (z - 1.0))
    value = (1.0 - z) ** (-a) * inner.value
    return SpecFunResult(value, inner.converged, inner.terms_used)


def _connection_large_negative(a: float, b: float, c: float, z: float) -> SpecFunResult:
    """1/z linear transformation of 2F1 for z -> -infinity (b - a not integer)."""
    f1 = _gauss_series(a, a + 1.0 - c, a + 1.0 - b, 1.0 / z)
    f2 = _gauss_series(b, b + 1.0 - c, b + 1.0 - a, 1.0 / z)
    if not (f1.converged and f2.converged):
        return SpecFunResult(math.nan, False, f1.terms_used + f2.terms_used)
    try:
        g1 = gamma_fn(c) * gamma_fn(b - a) / (gamma_fn(b) * gamma_fn(c - a))
        g2 = gamma_fn(c) * gamma_fn(a - b) / (gamma_fn(a) * gamma_fn(c - b))
    except DomainError:
        return SpecFunResult(math.nan, False, f1.terms_used + f2.terms_used)
    value = g1 * (-z) ** (-a) * f1.value + g2 * (-z) ** (-b) * f2.value
    return SpecFunResult(value, True, f1.terms_used + f2.terms_used)
