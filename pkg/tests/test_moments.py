import math
from fractions import Fraction

import mpmath
import pytest

from regtrees.moments import (
    check_dn,
    conjecture_gap,
    exhaustive_moments,
    expected_trees_asymptotic,
    expected_trees_exact,
    growth_log,
    janson_constants,
    lambda_prime_closed,
    lambda_prime_enumerate,
    lambda_prime_recurrence,
    moment_report,
    ratio_p,
    second_moment_exact,
    sum_lambda_zeta_sq,
)


@pytest.mark.parametrize(
    "d, j, lam, zeta",
    [(3, 1, Fraction(1), Fraction(-3, 4)), (3, 3, Fraction(4, 3), Fraction(-15, 64)), (4, 1, Fraction(3, 2), Fraction(-5, 9))],
)
def test_janson_constants(d, j, lam, zeta):
    c = janson_constants(d, j)
    assert (c.lam, c.zeta) == (lam, zeta)


@pytest.mark.parametrize("d", range(3, 11))
@pytest.mark.parametrize("j", range(1, 21))
def test_shifted_mean_identity(d, j):
    c = janson_constants(d, j)
    assert c.lam > 0 and c.zeta >= -1
    assert c.lam * (1 + c.zeta) == c.lambda_prime == lambda_prime_closed(d, j)


def test_lambda_prime_examples():
    for f in (lambda_prime_enumerate, lambda_prime_recurrence, lambda_prime_closed):
        assert f(3, 1) == Fraction(1, 4)
        assert f(3, 2) == Fraction(9, 16)
        assert f(4, 1) == Fraction(2, 3)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_lambda_prime_three_ways(d):
    for j in range(1, 11):
        assert lambda_prime_enumerate(d, j) == lambda_prime_recurrence(d, j) == lambda_prime_closed(d, j)


def test_enumeration_limit():
    with pytest.raises(ValueError):
        lambda_prime_enumerate(3, 17)


def test_closed_constant_examples():
    with mpmath.workprec(128):
        assert abs(sum_lambda_zeta_sq(3).closed - 9 / mpmath.sqrt(14)) < 1e-25
        # substituting d=4 gives 16/sqrt(3*2*13) = 16/sqrt(78)
        assert abs(sum_lambda_zeta_sq(4).closed - 16 / mpmath.sqrt(78)) < 1e-25
    assert float(sum_lambda_zeta_sq(3).closed) == pytest.approx(2.405351177, abs=1e-9)
    assert float(sum_lambda_zeta_sq(4).closed) == pytest.approx(1.8116433, abs=1e-7)


@pytest.mark.parametrize("d", range(3, 11))
def test_truncated_sum_matches_closed_form(d):
    s = sum_lambda_zeta_sq(d)
    direct = sum(
        janson_constants(d, j).lam * janson_constants(d, j).zeta ** 2 for j in range(1, 201)
    )
    assert abs(s.log_closed - mpmath.mpf(direct.numerator) / direct.denominator) < 1e-10
    assert abs(s.partial(200) - s.log_closed) < 1e-10


@pytest.mark.parametrize("d, n", [(3, 4), (4, 3), (3, 6), (5, 4), (6, 3)])
def test_moments_match_exhaustive_oracle(d, n):
    ey, ey2 = exhaustive_moments(d, n)
    assert expected_trees_exact(d, n) == ey
    assert second_moment_exact(d, n) == ey2


def test_frozen_small_values():
    assert expected_trees_exact(3, 4) == Fraction(72, 11)
    assert second_moment_exact(3, 4) == Fraction(26568, 385)


@pytest.mark.parametrize("d, n", [(2, 3), (4, 2), (3, 5), (5, 7)])
def test_contract_violations(d, n):
    with pytest.raises(ValueError):
        check_dn(d, n)
    with pytest.raises(ValueError):
        expected_trees_exact(d, n)


def test_conjecture_gap_rejects_cubic_and_parity():
    with pytest.raises(ValueError):
        conjecture_gap(3, 10)
    with pytest.raises(ValueError):
        conjecture_gap(5, 9)


def test_asymptotic_prefactor_and_growth():
    n = 37
    lv = expected_trees_asymptotic(3, n)
    pref = mpmath.exp(lv.log + mpmath.log(n) - n * growth_log(3))
    assert pref == pytest.approx(math.exp(19 / 16) * math.sqrt(2), rel=1e-15)
    assert float(pref) == pytest.approx(4.637, abs=5e-4)
    assert float(mpmath.exp(growth_log(3))) == pytest.approx(4 / math.sqrt(3), rel=1e-15)
    assert float(mpmath.exp(growth_log(3))) == pytest.approx(2.309401, abs=1e-6)


def test_first_moment_agrees_with_simple_graph_asymptotic():
    n = 200
    log_ey = mpmath.log(mpmath.mpf(expected_trees_exact(3, n).numerator)) - mpmath.log(
        expected_trees_exact(3, n).denominator
    )
    ratio = mpmath.exp(log_ey + mpmath.mpf(19) / 16 - expected_trees_asymptotic(3, n).log)
    assert abs(ratio - 1) < 0.02


def test_conjecture_gap_at_6_50():
    assert abs(conjecture_gap(6, 50).ratio - 1) < 0.15


def test_cauchy_schwarz():
    for d, n in [(3, 4), (3, 10), (4, 9), (5, 20), (6, 15), (10, 8)]:
        r = moment_report(d, n)
        assert r.ey2_exact >= r.ey_exact**2
        assert r.ey_exact > 0


def test_figure_shape():
    degrees = [3, 4, 5, 6, 100]
    for d in degrees:
        ns = [n for n in range(10, 51) if d * n % 2 == 0]
        ps = [ratio_p(d, n) for n in ns]
        assert all(a < b for a, b in zip(ps, ps[1:])), d
    at50 = [ratio_p(d, 50) for d in degrees]
    assert all(a < b for a, b in zip(at50, at50[1:]))


def test_log_value_formatting():
    lv = expected_trees_asymptotic(3, 100)
    assert lv.exponent10 == 35
    assert str(lv).startswith("1.03794918")
    assert float(lv) == pytest.approx(1.03794918423e35, rel=1e-10)
