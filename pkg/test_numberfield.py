#!/usr/bin/env python3
"""
Tests for exact number field arithmetic (services/numberfield.py).

Run with pytest, or directly: python test_numberfield.py
"""

import random
import sys
import os
from fractions import Fraction

import pytest

# Add the app directory to the Python path
sys.path.insert(0, os.path.dirname(__file__))

from services.errors import ConfigurationError, FieldDivisionByZero, ReducibleMinimalPolynomial
from services.exprparse import render_scalar
from services.numberfield import (
    RATIONALS, AlgebraicGenerator, NumberField, conjugate_scalar, cyclotomic_polynomial,
    rational_generator
)


def gaussian_sqrt2():
    return NumberField([rational_generator('I', [1, 0, 1], 0),
                        rational_generator('sqrt(2)', [-2, 0, 1], 1)])


def tan36_field():
    """Q(sqrt(5))(t) with t^2 = 5 - 2*sqrt(5)."""
    sqrt5 = rational_generator('sqrt(5)', [-5, 0, 1], 0)
    t = AlgebraicGenerator('t', [{(0,): Fraction(-5), (1,): Fraction(2)}, {}, {(0,): Fraction(1)}],
                           conjugation_source='t')
    field = NumberField([sqrt5, t])
    field.set_conjugation('t', field.gen('t'))
    return field


def test_generators_satisfy_their_polynomials():
    K = gaussian_sqrt2()
    i, s = K.gen('I'), K.gen('sqrt(2)')
    assert i * i == -1
    assert s * s == 2
    assert (i * s) ** 2 == -2
    print("PASS: I^2 = -1 and sqrt(2)^2 = 2 in Q(I, sqrt(2))")


def test_inverse_of_algebraic_element():
    K = gaussian_sqrt2()
    x = K.gen('sqrt(2)') + 1
    inv = x.inverse()
    assert x * inv == 1
    # 1/(1 + sqrt(2)) = sqrt(2) - 1
    assert inv == K.gen('sqrt(2)') - 1
    print("PASS: 1/(1+sqrt(2)) = sqrt(2) - 1")


def test_nested_generator():
    K = tan36_field()
    t, r5 = K.gen('t'), K.gen('sqrt(5)')
    assert t * t == 5 - r5 * 2
    # tan 72 = t*(2 + sqrt(5)) squares to 5 + 2*sqrt(5)
    assert (t * (r5 + 2)) ** 2 == r5 * 2 + 5
    assert (t / (t + 1)) * (t + 1) == t
    print("PASS: tower Q(sqrt(5))(t) reduces and inverts")


def test_field_axioms_on_random_elements():
    K = gaussian_sqrt2()
    rng = random.Random(7)
    for _ in range(20):
        a, b, c = (K.random_element(rng) for _ in range(3))
        assert a * (b + c) == a * b + a * c
        assert (a * b) * c == a * (b * c)
        if a:
            assert a * a.inverse() == 1
    print("PASS: distributivity, associativity and inverses on random elements")


def test_division_by_zero():
    K = gaussian_sqrt2()
    with pytest.raises(FieldDivisionByZero):
        K.zero.inverse()
    with pytest.raises(ZeroDivisionError):
        K.one / K.zero
    print("PASS: inverting zero raises FieldDivisionByZero")


def test_reducible_minimal_polynomial_detected_on_inversion():
    K = NumberField([rational_generator('r', [-4, 0, 1], 0, conjugation_source='r')])
    with pytest.raises(ReducibleMinimalPolynomial):
        (K.gen('r') - 2).inverse()
    print("PASS: z^2 - 4 reported as reducible")


def test_conjugation():
    K = gaussian_sqrt2()
    i, s = K.gen('I'), K.gen('sqrt(2)')
    assert (i + s).conjugate() == s - i
    x = K.random_element(random.Random(3))
    assert x.conjugate().conjugate() == x
    assert conjugate_scalar(RATIONALS, Fraction(3, 4)) == Fraction(3, 4)
    assert K.validate_conjugation()
    print("PASS: complex conjugation is an involution fixing sqrt(2)")


def test_bad_conjugation_image_rejected():
    K = NumberField([rational_generator('w', [1, 1, 1], 0, conjugation_source='w')])
    K.set_conjugation('w', K.gen('w') + 1)
    with pytest.raises(ConfigurationError):
        K.validate_conjugation()
    print("PASS: a conjugation image that is not a root is rejected")


def test_cyclotomic_polynomials():
    assert cyclotomic_polynomial(1) == (-1, 1)
    assert cyclotomic_polynomial(2) == (1, 1)
    assert cyclotomic_polynomial(3) == (1, 1, 1)
    assert cyclotomic_polynomial(4) == (1, 0, 1)
    assert cyclotomic_polynomial(6) == (1, -1, 1)
    K = NumberField([rational_generator('zeta', cyclotomic_polynomial(3), 0, conjugation_source='zeta')])
    zeta = K.gen('zeta')
    K.set_conjugation('zeta', zeta ** 2)
    assert zeta ** 3 == 1
    assert zeta.conjugate() * zeta == 1
    print("PASS: cyclotomic polynomials and a primitive cube root of unity")


def test_degree_one_generator():
    K = NumberField([rational_generator('zeta', cyclotomic_polynomial(2), 0, conjugation_source='zeta')])
    assert K.gen('zeta') == -1
    print("PASS: cyclotomic(2) gives zeta = -1")


def test_rendering():
    K = gaussian_sqrt2()
    x = K.gen('I') * K.gen('sqrt(2)') * Fraction(-1, 2) + 3
    assert render_scalar(x) == "3-1/2*I*sqrt(2)"
    assert render_scalar(Fraction(-7, 3)) == "-7/3"
    print("PASS: scalars render deterministically")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith('test_')]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            failed += 1
            print(f"FAIL: {test.__name__}: {e}")
    if failed:
        print(f"\nFAILED: {failed} number field test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All number field tests passed!")
