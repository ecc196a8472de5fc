"""Exact and asymptotic moments of the spanning-tree count of the pairing model.

Everything is computed in exact rationals; floats appear only at the very end,
through :mod:`mpmath` at :data:`~regtrees.exactnum.DEFAULT_PRECISION` bits.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Tuple

import mpmath

from .exactnum import DEFAULT_PRECISION, binom, log_rational, pairing_count, to_mpf
from .genfun import f_series, power_coeffs

#: Largest cycle length accepted by the brute-force intersection enumeration.
MAX_ENUMERATE_J = 16


def check_dn(d: int, n: int, *, min_d: int = 3, min_n: int = 3) -> None:
    """Contract shared by every moment function: ``d >= 3``, ``n >= 3``, ``d*n`` even."""
    if d < min_d:
        raise ValueError(f"d must be >= {min_d}, got {d}")
    if n < min_n:
        raise ValueError(f"n must be >= {min_n}, got {n}")
    if (d * n) % 2:
        raise ValueError(f"d*n must be even: odd d={d} requires even n, got n={n}")


@dataclass(frozen=True)
class LogValue:
    """A positive real held as its natural logarithm."""

    log: mpmath.mpf

    @property
    def exponent10(self) -> int:
        return int(mpmath.floor(self.log / mpmath.log(10)))

    @property
    def mantissa10(self) -> mpmath.mpf:
        return mpmath.exp(self.log - self.exponent10 * mpmath.log(10))

    def __float__(self) -> float:
        return float(mpmath.exp(self.log))

    def __str__(self) -> str:
        return f"{mpmath.nstr(self.mantissa10, 12)}e{self.exponent10:+d}"


# -- first moment -----------------------------------------------------------

def expected_trees_exact(d: int, n: int) -> Fraction:
    """``E[Y]`` over the pairing model, exactly."""
    check_dn(d, n)
    num = math.factorial(n - 2) * pairing_count(d * n - 2 * (n - 1)) * d**n * binom((d - 1) * n, n - 2)
    return Fraction(num, pairing_count(d * n))


def expected_trees_asymptotic(d: int, n: int, prec: int = DEFAULT_PRECISION) -> LogValue:
    """Asymptotic expected number of spanning trees of a random simple d-regular graph."""
    if d < 3:
        raise ValueError("d must be >= 3")
    with mpmath.workprec(prec):
        d_ = mpmath.mpf(d)
        log = (
            mpmath.mpf(6 * d * d - 14 * d + 7) / (4 * (d - 1) ** 2)
            + mpmath.log(d_ - 1) / 2
            - mpmath.log(n)
            - 3 * mpmath.log(d_ - 2) / 2
            + n * growth_log(d, prec)
        )
        return LogValue(+log)


def growth_log(d: int, prec: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """``log((d-1)^(d-1) / (d^2-2d)^(d/2-1))``, the per-vertex growth rate."""
    with mpmath.workprec(prec):
        d_ = mpmath.mpf(d)
        return (d_ - 1) * mpmath.log(d_ - 1) - (d_ / 2 - 1) * mpmath.log(d_ * d_ - 2 * d_)


# -- short-cycle constants ----------------------------------------------------

@dataclass(frozen=True)
class JansonConstants:
    d: int
    j: int
    lam: Fraction
    zeta: Fraction
    lambda_prime: Fraction


def janson_constants(d: int, j: int) -> JansonConstants:
    if d < 3 or j < 1:
        raise ValueError("need d >= 3 and j >= 1")
    q = (d - 1) ** j
    lam = Fraction(q, 2 * j)
    zeta = Fraction(-(2 * q - 1), q * q)
    return JansonConstants(d, j, lam, zeta, lam * (1 + zeta))


def _mu(d: int) -> Fraction:
    return Fraction((d - 2) ** 2, d - 1)


def lambda_prime_closed(d: int, j: int) -> Fraction:
    if d < 3 or j < 1:
        raise ValueError("need d >= 3 and j >= 1")
    q = (d - 1) ** j
    return Fraction((q - 1) ** 2, 2 * j * q)


def _path_sizes(q: Tuple[int, ...]) -> List[int]:
    """Vertex counts of the paths cut out of a j-cycle by the edges marked 1."""
    j = len(q)
    parent = list(range(j))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for k, bit in enumerate(q):
        if bit:
            a, b = find(k), find((k + 1) % j)
            if a != b:
                parent[a] = b
    sizes: dict = {}
    for v in range(j):
        r = find(v)
        sizes[r] = sizes.get(r, 0) + 1
    return list(sizes.values())


def lambda_prime_enumerate(d: int, j: int) -> Fraction:
    """Sum over all tree/cycle intersection patterns ``q != (1,...,1)``."""
    if d < 3 or j < 1:
        raise ValueError("need d >= 3 and j >= 1")
    if j > MAX_ENUMERATE_J:
        raise ValueError(f"enumeration over 2^j sequences limited to j <= {MAX_ENUMERATE_J}")
    mu = _mu(d)
    total = Fraction(0)
    for q in itertools.product((0, 1), repeat=j):
        if all(q):
            continue
        sizes = _path_sizes(q)
        total += mu ** len(sizes) * math.prod(sizes)
    return total / (2 * j)


def lambda_prime_recurrence(d: int, j: int) -> Fraction:
    """Dynamic program over (cycle length, number of paths)."""
    if d < 3 or j < 1:
        raise ValueError("need d >= 3 and j >= 1")
    mu = _mu(d)
    # table[i][t]: weight of sequences of length i with t paths and last entry 0
    table = [[Fraction(0)] * (j + 1) for _ in range(j + 1)]
    for i in range(1, j + 1):
        table[i][1] = i * mu
        for t in range(2, i + 1):
            table[i][t] = sum((k * mu * table[i - k][t - 1] for k in range(1, i)), Fraction(0))
    return sum((j * table[j][t] / t for t in range(1, j + 1)), Fraction(0)) / (2 * j)


def lambda_zeta_sq_term(d: int, j: int) -> Fraction:
    c = janson_constants(d, j)
    return c.lam * c.zeta**2


@dataclass(frozen=True)
class LambdaZetaSum:
    """``sum_j lambda_j zeta_j^2`` for fixed ``d``: closed form and partial sums."""

    d: int
    prec: int = DEFAULT_PRECISION

    @property
    def closed(self) -> mpmath.mpf:
        """``exp(sum_j lambda_j zeta_j^2) = d^2 / sqrt((d-1)(d-2)(d^2-d+1))``."""
        d = self.d
        with mpmath.workprec(self.prec):
            return mpmath.mpf(d * d) / mpmath.sqrt(mpmath.mpf((d - 1) * (d - 2) * (d * d - d + 1)))

    @property
    def log_closed(self) -> mpmath.mpf:
        with mpmath.workprec(self.prec):
            return mpmath.log(self.closed)

    def partial(self, J: int) -> mpmath.mpf:
        """Truncated sum over ``1 <= j <= J`` via the expanded term series."""
        d = self.d
        total = Fraction(0)
        for j in range(1, J + 1):
            q = Fraction(1, (d - 1) ** j)
            total += (4 * q - 4 * q * q + q**3) / (2 * j)
        return to_mpf(total, self.prec)

    def tail_from(self, j_min: int) -> mpmath.mpf:
        """``sum_{j >= j_min} lambda_j zeta_j^2`` (closed form minus a head)."""
        with mpmath.workprec(self.prec):
            return self.log_closed - (self.partial(j_min - 1) if j_min > 1 else 0)


def sum_lambda_zeta_sq(d: int, prec: int = DEFAULT_PRECISION) -> LambdaZetaSum:
    if d < 3:
        raise ValueError("d must be >= 3")
    return LambdaZetaSum(d, prec)


# -- second moment --------------------------------------------------------------

def max_components(d: int, n: int) -> int:
    """Upper limit of the sum over the number of tree-intersection components."""
    return n if d >= 4 else n // 2 + 2


@lru_cache(maxsize=256)
def component_sum(d: int, n: int) -> Fraction:
    """``sum_b 2^b / (b! ((d/2-1)n-b+2)!) [z^n] f(z)^b`` with ``f = sum C((d-1)j, j) z^j``."""
    check_dn(d, n)
    half = (d - 2) * n // 2
    top = min(max_components(d, n), n)
    coeffs = power_coeffs(f_series(d, n), top, n)
    total = Fraction(0)
    for b in range(1, top + 1):
        c = coeffs[b]
        if c:
            total += Fraction(2**b * c.numerator, math.factorial(b) * math.factorial(half - b + 2) * c.denominator)
    return total


def pairing_second_moment(d: int, n: int) -> Fraction:
    """``|P_{n,d}| * E[Y^2]``: ordered pairs of spanning trees summed over pairings."""
    check_dn(d, n)
    half = (d - 2) * n // 2
    pref = Fraction(math.factorial(n) * math.factorial((d - 2) * n) * d**n, 2 ** (half + 2))
    return pref * component_sum(d, n)


def second_moment_exact(d: int, n: int) -> Fraction:
    return pairing_second_moment(d, n) / pairing_count(d * n)


@dataclass(frozen=True)
class MomentReport:
    d: int
    n: int
    ey_exact: Fraction
    ey2_exact: Fraction
    ratio: Fraction
    p: mpmath.mpf

    def as_dict(self, digits: int = 20) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "ey": f"{self.ey_exact.numerator}/{self.ey_exact.denominator}",
            "ey_float": mpmath.nstr(to_mpf(self.ey_exact), digits),
            "ey2": f"{self.ey2_exact.numerator}/{self.ey2_exact.denominator}",
            "ey2_float": mpmath.nstr(to_mpf(self.ey2_exact), digits),
            "ratio_float": mpmath.nstr(to_mpf(self.ratio), digits),
            "p": mpmath.nstr(self.p, digits),
        }


def moment_report(d: int, n: int, prec: int = DEFAULT_PRECISION) -> MomentReport:
    ey = expected_trees_exact(d, n)
    ey2 = second_moment_exact(d, n)
    ratio = ey2 / (ey * ey)
    with mpmath.workprec(prec):
        p = to_mpf(ratio, prec) / sum_lambda_zeta_sq(d, prec).closed
    return MomentReport(d, n, ey, ey2, ratio, p)


def ratio_p(d: int, n: int, prec: int = DEFAULT_PRECISION) -> mpmath.mpf:
    """``(E[Y^2]/E[Y]^2) / exp(sum_j lambda_j zeta_j^2)``."""
    return moment_report(d, n, prec).p


@dataclass(frozen=True)
class ConjectureGap:
    lhs: LogValue
    rhs: LogValue

    @property
    def ratio(self) -> mpmath.mpf:
        return mpmath.exp(self.lhs.log - self.rhs.log)


def conjecture_gap(d: int, n: int, prec: int = DEFAULT_PRECISION) -> ConjectureGap:
    """Exact component sum against its conjectured asymptotic (``d >= 4``)."""
    if d < 4:
        raise ValueError("the equivalent asymptotic form is stated for d >= 4 only")
    check_dn(d, n)
    lhs = log_rational(component_sum(d, n), prec)
    with mpmath.workprec(prec):
        d_ = mpmath.mpf(d)
        rhs = (
            mpmath.log(2 * d_ * d_)
            - mpmath.log(mpmath.pi)
            - 4 * mpmath.log(d_ - 2)
            - 3 * mpmath.log(n)
            + mpmath.log((2 * d_ - 2) / (d_ * d_ - d_ + 1)) / 2
            + n
            * (
                2 * (d_ - 1) * mpmath.log(d_ - 1)
                - 2 * (d_ - 2) * mpmath.log(d_ - 2)
                + (d_ / 2 - 1) * mpmath.log(2 * mpmath.e / (d_ * n))
            )
        )
    return ConjectureGap(LogValue(lhs), LogValue(+rhs))


# -- brute-force oracles ------------------------------------------------------------

def exhaustive_moments(d: int, n: int) -> Tuple[Fraction, Fraction]:
    """``(E[Y], E[Y^2])`` by summing tau over every pairing's projection."""
    from .pairing import multigraph_from_key, projection_counts
    from .treecount import spanning_tree_count

    counts = projection_counts(d, n)
    s1 = s2 = 0
    for key, w in counts.items():
        t = spanning_tree_count(multigraph_from_key(n, key))
        s1 += w * t
        s2 += w * t * t
    total = pairing_count(d * n)
    return Fraction(s1, total), Fraction(s2, total)
