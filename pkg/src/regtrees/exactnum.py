"""Exact integer/rational kernel.

Python's ``int`` is the unbounded integer type and :class:`fractions.Fraction`
is the reduced rational type; this module only adds the counting functions
used throughout the package and the conversion helpers to high-precision
floats.
"""

from __future__ import annotations

import math
import os
from fractions import Fraction
from typing import Union

import mpmath

BigInt = int
BigRat = Fraction
Rational = Union[int, Fraction]

#: Working precision (bits) for every exact -> float conversion.
DEFAULT_PRECISION = max(128, int(os.environ.get("REGTREES_PRECISION", "128")))


def factorial(k: int) -> int:
    if k < 0:
        raise ValueError(f"factorial of negative number {k}")
    return math.factorial(k)


def pairing_count(m: int) -> int:
    """Number of perfect matchings on ``m`` labelled points, ``(m-1)!!``."""
    if m < 0 or m % 2:
        raise ValueError(f"pairing_count needs a nonnegative even argument, got {m}")
    result = 1
    for odd in range(1, m, 2):
        result *= odd
    return result


def binom(n: int, k: int) -> int:
    if k < 0:
        return 0
    if n >= 0:
        return math.comb(n, k) if k <= n else 0
    # generalized binomial for negative upper index
    return falling(n, k) // math.factorial(k)


def falling(n: int, k: int) -> int:
    """Falling factorial ``n (n-1) ... (n-k+1)``."""
    if k < 0:
        raise ValueError(f"falling factorial needs k >= 0, got {k}")
    result = 1
    for i in range(k):
        result *= n - i
        if result == 0:
            break
    return result


def to_mpf(x: Rational, prec: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """Convert an exact rational to an ``mpf`` rounded at ``prec`` bits."""
    x = Fraction(x)
    with mpmath.workprec(prec):
        return mpmath.mpf(x.numerator) / x.denominator


def log_rational(x: Rational, prec: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """Natural log of a positive rational, accurate even for enormous operands."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of nonpositive rational")
    with mpmath.workprec(prec + 32):
        val = mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator))
    with mpmath.workprec(prec):
        return +val


def log_factorial(k: int, prec: int = DEFAULT_PRECISION) -> mpmath.mpf:
    with mpmath.workprec(prec):
        return mpmath.loggamma(k + 1)


def format_rational(x: Rational, digits: int = 30) -> str:
    """Decimal view of an exact rational (``digits`` significant figures)."""
    prec = max(DEFAULT_PRECISION, int(digits * 3.33) + 16)
    with mpmath.workprec(prec):
        return mpmath.nstr(to_mpf(x, prec), digits)
