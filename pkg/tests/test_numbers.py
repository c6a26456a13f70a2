"""Exact scalar kernels: rational numbers and certified-sign radicals."""

import fractions
import math

import gmpy2
import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import spybilliard.numbers as numbers
from spybilliard.numbers import (
    Q,
    IntervalScalar,
    UndecidableSignError,
    as_float,
    is_zero,
    rationalize,
    scalar_from_string,
    scalar_to_string,
    set_precision_floor,
    sgn,
)

rationals = st.fractions(
    min_value=-1000, max_value=1000, max_denominator=97
)


@pytest.fixture(autouse=True)
def _restore_precision_floor():
    saved = numbers._precision_floor
    yield
    set_precision_floor(saved)


def interval(text: str) -> IntervalScalar:
    return scalar_from_string(text, "interval")


# ---------------------------------------------------------------------------
# Rational kernel
# ---------------------------------------------------------------------------


class TestRationalKernel:
    def test_arithmetic_is_exact(self):
        assert Q(1, 3) + Q(1, 6) == Q(1, 2)
        assert Q(2, 7) * Q(7, 2) == 1
        assert Q(1, 10) + Q(2, 10) == Q(3, 10)  # no float drift

    def test_sgn(self):
        assert sgn(Q(5, 3)) == 1
        assert sgn(Q(-2)) == -1
        assert sgn(Q(0)) == 0

    def test_is_zero(self):
        assert is_zero(Q(0))
        assert not is_zero(Q(1, 10**12))

    @given(rationals)
    def test_sgn_matches_fraction_comparison(self, f):
        x = Q(f.numerator, f.denominator)
        assert sgn(x) == (f > 0) - (f < 0)

    @given(rationals)
    def test_string_round_trip(self, f):
        x = Q(f.numerator, f.denominator)
        assert scalar_from_string(scalar_to_string(x), "rational") == x

    def test_string_rejects_garbage(self):
        with pytest.raises(ValueError):
            scalar_from_string("not-a-number", "rational")
        with pytest.raises(ValueError):
            scalar_from_string("sqrt(2)", "rational")

    def test_as_float(self):
        assert as_float(Q(1, 4)) == 0.25

    def test_rationalize(self):
        assert rationalize(Q(3, 7)) == fractions.Fraction(3, 7)


# ---------------------------------------------------------------------------
# Certified signs on radical expressions
# ---------------------------------------------------------------------------


class TestCertifiedSign:
    def test_simple_signs(self):
        assert sgn(interval("sqrt(2)") - interval("1")) == 1
        assert sgn(interval("1") - interval("sqrt(2)")) == -1

    def test_exact_zero_in_quadratic_field(self):
        x = interval("sqrt(2)")
        assert sgn((x + 1) * (x - 1) - 1) == 0
        assert sgn(x * x - 2) == 0
        assert sgn((x + 3) * (x + 3) - (11 + 6 * x)) == 0

    def test_tight_rational_separations(self):
        # sqrt(2) = 1.41421356237309504880...
        x = interval("sqrt(2)")
        assert sgn(x - interval("141421356/100000000")) == 1
        assert sgn(x - interval("141421357/100000000")) == -1

    def test_deep_derivation_chain_stays_decidable(self):
        # Long chains of arithmetic must not lose exactness.
        x = interval("sqrt(3)") / 7
        acc = interval("0")
        for _ in range(200):
            acc = acc + x
        assert sgn(acc - interval("200/7") * interval("sqrt(3)")) == 0

    def test_division_in_quadratic_field(self):
        x = interval("sqrt(5)")
        inv = 1 / (x + 2)  # equals sqrt(5) - 2
        assert sgn(inv - (x - 2)) == 0

    @given(
        a=rationals,
        b=rationals,
        d=st.sampled_from([2, 3, 5, 6, 7, 10]),
    )
    @settings(max_examples=60, deadline=None)
    def test_sign_matches_high_precision_float(self, a, b, d):
        expr = (
            interval(f"{a.numerator}/{a.denominator}")
            + interval(f"{b.numerator}/{b.denominator}") * interval(f"sqrt({d})")
        )
        with mpmath.workprec(300):
            val = mpmath.mpf(a.numerator) / a.denominator + (
                mpmath.mpf(b.numerator) / b.denominator
            ) * mpmath.sqrt(d)
            want = 0 if a == b == 0 else (1 if val > 0 else (-1 if val < 0 else 0))
        assert sgn(expr) == want

    @given(a=rationals, b=rationals)
    @settings(max_examples=40, deadline=None)
    def test_product_difference_identity(self, a, b):
        x = interval(f"{a.numerator}/{a.denominator}") + interval("sqrt(2)")
        y = interval(f"{b.numerator}/{b.denominator}") - interval("sqrt(2)")
        lhs = (x + y) * (x - y)
        rhs = x * x - y * y
        assert sgn(lhs - rhs) == 0

    def test_is_zero_and_float(self):
        x = interval("sqrt(2)") * interval("sqrt(2)") - 2
        assert is_zero(x)
        assert abs(as_float(interval("sqrt(2)")) - math.sqrt(2)) < 1e-12

    def test_string_round_trip_interval(self):
        x = interval("sqrt(2)/2")
        y = scalar_from_string(scalar_to_string(x), "interval")
        assert sgn(x - y) == 0

    def test_precision_floor(self):
        set_precision_floor(256)
        assert numbers._ladder()[0] == 256
        assert sgn(interval("sqrt(2)") - 1) == 1
        set_precision_floor(8192)  # above every rung: single custom rung
        assert numbers._ladder() == (8192,)
        assert sgn(interval("sqrt(3)") - 2) == -1
        with pytest.raises(ValueError):
            set_precision_floor(2)


# ---------------------------------------------------------------------------
# Internal helpers of the quadratic-field fast path
# ---------------------------------------------------------------------------


class TestQuadraticInternals:
    @given(st.integers(min_value=1, max_value=100_000))
    @settings(max_examples=120)
    def test_squarefree_split(self, n):
        d, s = numbers._squarefree_split(n)
        assert d * s * s == n
        assert all(d % (p * p) for p in range(2, int(math.isqrt(d)) + 1))

    def test_quad_sign_cases(self):
        mpq = gmpy2.mpq
        qs = numbers._quad_sign
        assert qs(mpq(0), mpq(0), 2) == 0
        assert qs(mpq(3), mpq(1), 2) == 1
        assert qs(mpq(-3), mpq(-1), 2) == -1
        # opposite signs: verdict decided by a^2 - b^2 d
        assert qs(mpq(3), mpq(-2), 2) == 1  # 9 > 8
        assert qs(mpq(-3), mpq(2), 2) == -1
        assert qs(mpq(2), mpq(-3), 2) == -1  # 4 < 18: the radical part wins
        assert qs(mpq(-2), mpq(3), 2) == 1
        assert qs(mpq(1), mpq(-1), 1) == 0  # 1 - sqrt(1) = 0 exactly
