"""Wigner 3-j and 6-j symbols via the Racah sums.

Arguments may be ints, floats or ``fractions.Fraction`` values that are
integer or half-integer. Internally everything is carried as doubled integers.
For arguments with all ``j <= 20`` the sums are evaluated in exact rational
arithmetic and converted to float only at the end; larger arguments fall back
to a log-factorial evaluation.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

EXACT_J_MAX = 20


def _twice(x) -> int:
    """Return 2*x as an int, rejecting values that are not half-integers."""
    d = 2 * Fraction(x).limit_denominator(1000)
    if d.denominator != 1:
        raise ValueError(f"{x!r} is not an integer or half-integer")
    return int(d)


def _fact_exact(n2: int) -> int:
    # n2 is a doubled, even, non-negative argument
    return math.factorial(n2 // 2)


def _lfact(n2: int) -> float:
    return math.lgamma(n2 // 2 + 1)


def _triangle_ok(a: int, b: int, c: int) -> bool:
    # doubled arguments
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _delta_exact(a: int, b: int, c: int) -> Fraction:
    return Fraction(
        _fact_exact(a + b - c) * _fact_exact(a - b + c) * _fact_exact(-a + b + c),
        _fact_exact(a + b + c + 2),
    )


def _delta_log(a: int, b: int, c: int) -> float:
    return _lfact(a + b - c) + _lfact(a - b + c) + _lfact(-a + b + c) - _lfact(a + b + c + 2)


def _signed_sqrt(x: Fraction, s: Fraction) -> float:
    """Return sign(s) * sqrt(x * s**2), computed from exact rationals."""
    if s == 0:
        return 0.0
    val = x * s * s
    return math.copysign(math.sqrt(val.numerator) / math.sqrt(val.denominator), s)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """Wigner 3-j symbol ``(j1 j2 j3; m1 m2 m3)``.

    Returns 0 whenever a triangle or projection selection rule fails.

    Examples
    --------
    >>> round(wigner3j(0.5, 0.5, 0, 0.5, -0.5, 0), 6)
    0.707107
    """
    return _w3j(_twice(j1), _twice(j2), _twice(j3), _twice(m1), _twice(m2), _twice(m3))


@lru_cache(maxsize=65536)
def _w3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j + m) % 2:
            return 0.0
    if m1 == m2 == m3 == 0 and ((j1 + j2 + j3) // 2) % 2:
        return 0.0

    kmin = max(0, j2 - j3 - m1, j1 - j3 + m2)
    kmax = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    phase = -1 if ((j1 - j2 - m3) // 2) % 2 else 1

    if max(j1, j2, j3) <= 2 * EXACT_J_MAX:
        pref = _delta_exact(j1, j2, j3) * (
            _fact_exact(j1 + m1) * _fact_exact(j1 - m1) * _fact_exact(j2 + m2)
            * _fact_exact(j2 - m2) * _fact_exact(j3 + m3) * _fact_exact(j3 - m3)
        )
        s = Fraction(0)
        for k in range(kmin, kmax + 1, 2):
            den = (
                _fact_exact(k) * _fact_exact(j3 - j2 + k + m1) * _fact_exact(j3 - j1 + k - m2)
                * _fact_exact(j1 + j2 - j3 - k) * _fact_exact(j1 - k - m1) * _fact_exact(j2 - k + m2)
            )
            s += Fraction(-1 if (k // 2) % 2 else 1, den)
        return phase * _signed_sqrt(pref, s)

    logpref = 0.5 * (
        _delta_log(j1, j2, j3) + _lfact(j1 + m1) + _lfact(j1 - m1) + _lfact(j2 + m2)
        + _lfact(j2 - m2) + _lfact(j3 + m3) + _lfact(j3 - m3)
    )
    total = 0.0
    for k in range(kmin, kmax + 1, 2):
        lt = -(
            _lfact(k) + _lfact(j3 - j2 + k + m1) + _lfact(j3 - j1 + k - m2)
            + _lfact(j1 + j2 - j3 - k) + _lfact(j1 - k - m1) + _lfact(j2 - k + m2)
        )
        total += (-1 if (k // 2) % 2 else 1) * math.exp(lt + logpref)
    return phase * total


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6-j symbol ``{j1 j2 j3; j4 j5 j6}``.

    Returns 0 when any of the four triads ``(j1 j2 j3)``, ``(j1 j5 j6)``,
    ``(j4 j2 j6)``, ``(j4 j5 j3)`` violates the triangle rule.
    """
    return _w6j(*(_twice(x) for x in (j1, j2, j3, j4, j5, j6)))


@lru_cache(maxsize=65536)
def _w6j(a: int, b: int, c: int, d: int, e: int, f: int) -> float:
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0
    sums = [sum(t) for t in triads]
    tmin = max(sums)
    tmax = min(a + b + d + e, b + c + e + f, c + a + f + d)

    if max(a, b, c, d, e, f) <= 2 * EXACT_J_MAX:
        pref = Fraction(1)
        for t in triads:
            pref *= _delta_exact(*t)
        s = Fraction(0)
        for t in range(tmin, tmax + 1, 2):
            den = _fact_exact(a + b + d + e - t) * _fact_exact(b + c + e + f - t) * _fact_exact(c + a + f + d - t)
            for sm in sums:
                den *= _fact_exact(t - sm)
            s += Fraction((-1 if (t // 2) % 2 else 1) * _fact_exact(t + 2), den)
        return _signed_sqrt(pref, s)

    logpref = 0.5 * sum(_delta_log(*t) for t in triads)
    total = 0.0
    for t in range(tmin, tmax + 1, 2):
        lt = _lfact(t + 2) - (
            _lfact(a + b + d + e - t) + _lfact(b + c + e + f - t) + _lfact(c + a + f + d - t)
            + sum(_lfact(t - sm) for sm in sums)
        )
        total += (-1 if (t // 2) % 2 else 1) * math.exp(lt + logpref)
    return total


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """Clebsch-Gordan coefficient ``<j1 m1; j2 m2 | J M>``."""
    phase = -1 if (_twice(j1) - _twice(j2) + _twice(M)) // 2 % 2 else 1
    return phase * math.sqrt(_twice(J) + 1) * wigner3j(j1, j2, J, m1, m2, -Fraction(M))
