"""Truncated power series with exact rational coefficients.

Only what the spanning-tree moment formulas need: the two concrete series,
truncated products, coefficient extraction of powers, and a numerical
Cauchy-integral cross-check of that extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Sequence

import numpy as np

from .exactnum import Rational, binom, falling


@dataclass(frozen=True)
class PowerSeries:
    """``sum_{k<=order} coeffs[k] z^k``; products truncate to the smaller order."""

    coeffs: tuple

    def __init__(self, coeffs: Sequence[Rational]):
        if not coeffs:
            raise ValueError("a power series needs at least the constant coefficient")
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int) -> Fraction:
        if k < 0 or k > self.order:
            raise IndexError(f"coefficient {k} outside truncation order {self.order}")
        return self.coeffs[k]

    def truncate(self, order: int) -> "PowerSeries":
        if order > self.order:
            raise ValueError("truncation cannot extend the order")
        return PowerSeries(self.coeffs[: order + 1])

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        m = min(self.order, other.order)
        return PowerSeries([self.coeffs[k] + other.coeffs[k] for k in range(m + 1)])

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            return PowerSeries([c * Fraction(other) for c in self.coeffs])
        m = min(self.order, other.order)
        return PowerSeries(_convolve(self.coeffs, other.coeffs, m))

    __rmul__ = __mul__

    def __pow__(self, b: int) -> "PowerSeries":
        if b < 0:
            raise ValueError("negative powers are not supported")
        result = PowerSeries([1] + [0] * self.order)
        for _ in range(b):
            result = result * self
        return result

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)


def _convolve(a: Sequence, b: Sequence, order: int) -> list:
    out = []
    for k in range(order + 1):
        acc = 0
        for i in range(k + 1):
            if a[i] and b[k - i]:
                acc += a[i] * b[k - i]
        out.append(acc)
    return out


def tree_edge_series(d: int, order: int) -> PowerSeries:
    """``sum_j (d)_j / (j-1)! x^j``, i.e. ``d x (1+x)^(d-1)``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    coeffs = [Fraction(0)]
    for j in range(1, order + 1):
        coeffs.append(Fraction(falling(d, j), math.factorial(j - 1)))
    return PowerSeries(coeffs)


def f_series(d: int, order: int) -> PowerSeries:
    """``sum_{j>=1} C((d-1)j, j) z^j`` (no constant term)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    return PowerSeries([0] + [binom((d - 1) * j, j) for j in range(1, order + 1)])


def power_coeffs(s: PowerSeries, b_max: int, n: int) -> List[Fraction]:
    """``[[z^n] s^b for b in 0..b_max]`` by incremental truncated convolution."""
    if n > s.order:
        raise ValueError(f"coefficient index {n} exceeds series order {s.order}")
    return [c for _, c in _iter_power_coeffs(s, b_max, n)]


def _iter_power_coeffs(s: PowerSeries, b_max: int, n: int) -> Iterator:
    integral = s.is_integral()
    base = [int(c) if integral else c for c in s.coeffs[: n + 1]]
    # s^b vanishes below degree b*val, so the low part of each power is skipped
    val = next((k for k, c in enumerate(base) if c), n + 1)
    cur = [1] + [0] * n
    low = 0
    yield 0, Fraction(cur[n])
    for b in range(1, b_max + 1):
        low += val
        if low > n:
            yield b, Fraction(0)
            continue
        nxt = [0] * (n + 1)
        for i in range(low - val, n + 1):
            ci = cur[i]
            if not ci:
                continue
            for j in range(val, n - i + 1):
                bj = base[j]
                if bj:
                    nxt[i + j] += ci * bj
        cur = nxt
        yield b, Fraction(cur[n])


def pow_coeff(s: PowerSeries, b: int, n: int) -> Fraction:
    """Exact ``[z^n] s^b``."""
    if b < 0 or n < 0:
        raise ValueError("b and n must be nonnegative")
    return power_coeffs(s, b, n)[b]


def scaled_f_coefficients(d: int, count: int) -> np.ndarray:
    """Float coefficients of ``f(rho z)`` with ``rho`` the radius of convergence."""
    rho = Fraction((d - 2) ** (d - 2), (d - 1) ** (d - 1))
    out = np.zeros(count + 1)
    for j in range(1, count + 1):
        out[j] = float(binom((d - 1) * j, j) * rho**j)
    return out


def scaled_f(d: int, z: np.ndarray) -> np.ndarray:
    """Evaluate the radius-normalised series, analytic on the open unit disk."""
    z = np.asarray(z, dtype=complex)
    if d == 3:
        return (1 - z) ** -0.5 - 1
    r = float(np.max(np.abs(z))) if z.size else 0.0
    if r >= 1:
        raise ValueError("scaled series diverges for |z| >= 1")
    # terms decay like r^j / sqrt(j); stop well below double precision
    terms = int(math.ceil(math.log(1e-20) / math.log(max(r, 1e-3)))) + 8
    coeffs = scaled_f_coefficients(d, terms)
    return np.polyval(coeffs[::-1], z)


def coeff_by_contour(d: int, b: int, n: int, radius: float = 0.5, grid: int = 2048) -> complex:
    """Trapezoidal Cauchy integral for ``[z^n] f_scaled(z)^b`` on ``|z| = radius``."""
    if not 0 < radius < 1:
        raise ValueError("radius must lie in (0, 1)")
    if grid < 1:
        raise ValueError("grid must be positive")
    theta = -np.pi + 2 * np.pi * np.arange(grid) / grid
    z = radius * np.exp(1j * theta)
    vals = scaled_f(d, z) ** b / z**n
    return complex(vals.mean())


def scaled_exact_coeff(d: int, b: int, n: int) -> Fraction:
    """Exact counterpart of :func:`coeff_by_contour`."""
    rho = Fraction((d - 2) ** (d - 2), (d - 1) ** (d - 1))
    return pow_coeff(f_series(d, max(n, 1)), b, n) * rho**n
