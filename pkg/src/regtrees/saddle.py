"""Saddle-point apparatus for the cubic second moment.

All evaluations run in :mod:`mpmath`; derivatives are central differences
with steps near the square (gradient) or fourth (Hessian) root of the
working epsilon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .exactnum import log_rational
from .genfun import coeff_by_contour
from .moments import LogValue, component_sum, expected_trees_exact, pairing_second_moment, second_moment_exact

#: Bits used by every saddle computation.
SADDLE_PRECISION = 192

BETA_STAR = Fraction(1, 3)


def _num(x):
    """Convert at the current working precision (Fractions stay exact until here)."""
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpmathify(x)


def f3(z):
    """``(1 - z)^(-1/2) - 1`` on the open unit disk."""
    z = mpmath.mpmathify(z)
    if abs(z) >= 1:
        raise ValueError("f3 is only defined for |z| < 1")
    return (1 - z) ** mpmath.mpf(-0.5) - 1


def f3_prime(z):
    z = mpmath.mpmathify(z)
    return (1 - z) ** mpmath.mpf(-1.5) / 2


def _r(beta):
    return (8 - 4 * beta - beta**2 - mpmath.sqrt(beta**3 * (8 + beta))) / 8


def r_beta(beta) -> mpmath.mpf:
    """Contour radius on which the theta-derivative of phi vanishes at theta = 0."""
    with mpmath.workprec(SADDLE_PRECISION):
        beta = _num(beta)
        if not 0 < beta <= mpmath.mpf(1) / 2:
            raise ValueError("beta must lie in (0, 1/2]")
        return _r(beta)


def stationarity_residual(beta) -> mpmath.mpf:
    """``beta r f'(r) - f(r)`` at ``r = r_beta``; zero by construction."""
    with mpmath.workprec(SADDLE_PRECISION):
        r = r_beta(beta)
        return beta * r * f3_prime(r) - f3(r)


def _check_open(beta):
    if not 0 < beta < mpmath.mpf(1) / 2:
        raise ValueError("beta must lie strictly inside (0, 1/2)")


def phi(beta, theta) -> mpmath.mpc:
    with mpmath.workprec(SADDLE_PRECISION):
        beta = _num(beta)
        theta = _num(theta)
        _check_open(beta)
        r = _r(beta)
        half = mpmath.mpf(1) / 2 - beta
        return (
            beta * mpmath.log(2 * f3(r * mpmath.expj(theta)))
            - mpmath.log(r)
            - 1j * theta
            - beta * mpmath.log(beta)
            - half * mpmath.log(half)
        )


def psi(beta, theta=0) -> mpmath.mpf:
    with mpmath.workprec(SADDLE_PRECISION):
        beta = _num(beta)
        _check_open(beta)
        return beta ** mpmath.mpf(-0.5) * (mpmath.mpf(1) / 2 - beta) ** mpmath.mpf(-2.5)


def gradient(beta, theta, h=None):
    """Central-difference gradient of phi (complex entries)."""
    with mpmath.workprec(SADDLE_PRECISION):
        if h is None:
            h = mpmath.mpf(2) ** (-SADDLE_PRECISION // 2)
        beta, theta = _num(beta), _num(theta)
        gb = (phi(beta + h, theta) - phi(beta - h, theta)) / (2 * h)
        gt = (phi(beta, theta + h) - phi(beta, theta - h)) / (2 * h)
        return gb, gt


def hessian(beta, theta, h=None):
    """Central-difference Hessian of phi as a 2x2 nested list (complex entries)."""
    with mpmath.workprec(SADDLE_PRECISION):
        if h is None:
            h = mpmath.mpf(2) ** (-SADDLE_PRECISION // 4)
        b, t = _num(beta), _num(theta)
        c = phi(b, t)
        hbb = (phi(b + h, t) - 2 * c + phi(b - h, t)) / h**2
        htt = (phi(b, t + h) - 2 * c + phi(b, t - h)) / h**2
        hbt = (phi(b + h, t + h) - phi(b + h, t - h) - phi(b - h, t + h) + phi(b - h, t - h)) / (4 * h * h)
        return [[hbb, hbt], [hbt, htt]]


def find_stationary_point(guess=0.3, tol=1e-40, max_iter=100):
    """Newton iteration on the beta-component of the gradient along theta = 0.

    The theta-component vanishes identically there because of how
    :func:`r_beta` is chosen, so the 2-d problem reduces to one variable.
    """
    with mpmath.workprec(SADDLE_PRECISION):
        beta = _num(guess)
        h = mpmath.mpf(2) ** (-SADDLE_PRECISION // 4)

        def g(b):
            return mpmath.re(gradient(b, 0)[0])

        for _ in range(max_iter):
            slope = (g(beta + h) - g(beta - h)) / (2 * h)
            step = g(beta) / slope
            beta -= step
            if not 0 < beta < 0.5:
                raise ArithmeticError("Newton iteration left the domain (0, 1/2)")
            if abs(step) < tol:
                return beta, mpmath.mpf(0)
        raise ArithmeticError("stationary point search did not converge")


def hessian_at_star():
    """Real 2x2 Hessian of phi at (1/3, 0)."""
    H = hessian(BETA_STAR, 0)
    return [[mpmath.re(x) for x in row] for row in H]


def gaussian_constant() -> mpmath.mpf:
    """``2 pi psi(x*) det(-H)^(-1/2)``, the limit of the rescaled dominant region."""
    with mpmath.workprec(SADDLE_PRECISION):
        H = hessian_at_star()
        det = H[0][0] * H[1][1] - H[0][1] * H[1][0]
        return 2 * mpmath.pi * psi(BETA_STAR) / mpmath.sqrt(det)


def _check_n(n: int) -> None:
    if n < 4 or n % 2:
        raise ValueError(f"n must be even and >= 4, got {n}")


def fn_asymptotic(n: int) -> LogValue:
    """``log`` of ``72/(n^3 sqrt 7) * (4 sqrt(2e/(3n)))^n``."""
    _check_n(n)
    with mpmath.workprec(SADDLE_PRECISION):
        return LogValue(
            mpmath.log(72)
            - 3 * mpmath.log(n)
            - mpmath.log(7) / 2
            + n * (mpmath.log(4) + (mpmath.log(2) + 1 - mpmath.log(3 * n)) / 2)
        )


def fn_exact_rational(n: int) -> Fraction:
    """``F_n / (2 pi)``: exact rational core of the contour-integral sum."""
    _check_n(n)
    return Fraction(2 ** (n // 2 + 2)) * pairing_second_moment(3, n) / (4**n * math.factorial(n) ** 2 * 3**n)


def fn_exact(n: int) -> LogValue:
    """``log F_n`` from the exact second moment."""
    with mpmath.workprec(SADDLE_PRECISION):
        return LogValue(mpmath.log(2 * mpmath.pi) + log_rational(fn_exact_rational(n), SADDLE_PRECISION))


def fn_quadrature(n: int, grid: int = 4096) -> float:
    """``F_n`` by trapezoidal contour integrals on the radii ``r_beta(b/n)``.

    Independent of the exact power-series route; double precision only.
    """
    _check_n(n)
    total = 0.0
    half = n // 2
    for b in range(1, half + 3):
        beta = min(Fraction(b, n), Fraction(1, 2))
        r = float(r_beta(beta))
        coeff = coeff_by_contour(3, b, n, r, grid).real
        weight = math.exp(b * math.log(2) - math.lgamma(b + 1) - math.lgamma(half - b + 3))
        total += 2 * math.pi * weight * coeff
    return total


@dataclass(frozen=True)
class SecondMomentCheck:
    n: int
    ey2_ratio: mpmath.mpf  # E[Y^2] / ((18/sqrt 14) (16/3)^n)
    normalized_ratio: mpmath.mpf  # (E[Y^2]/E[Y]^2) / (9/sqrt 14)
    ey2_corrected_ratio: mpmath.mpf  # E[Y^2] / ((18/sqrt 14) (16/3)^n / n^2)


def ey2_asymptotic_check(n: int) -> SecondMomentCheck:
    _check_n(n)
    ey2 = second_moment_exact(3, n)
    ey = expected_trees_exact(3, n)
    with mpmath.workprec(SADDLE_PRECISION):
        log_target = mpmath.log(18) - mpmath.log(14) / 2 + n * mpmath.log(mpmath.mpf(16) / 3)
        r1 = mpmath.exp(log_rational(ey2, SADDLE_PRECISION) - log_target)
        r2 = mpmath.exp(
            log_rational(ey2 / (ey * ey), SADDLE_PRECISION) - (mpmath.log(9) - mpmath.log(14) / 2)
        )
        r3 = r1 * n * n
    return SecondMomentCheck(n, r1, r2, r3)
