#!/usr/bin/env python3
"""
Tests for sparse polynomials and polynomial matrices (services/multipoly.py).
"""

import random
import sys
import os
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from services.errors import DivisibilityError, NotAnInvariantError, VariableMismatchError
from services.multipoly import (
    MultiPolynomial, PolyMatrix, PolyRing, RationalFunction, adjugate, determinant, express_in_invariants,
    identity_matrix, jacobian, linear_solve, random_matrix, weighted_monomials
)
from services.numberfield import RATIONALS


def rings():
    p = PolyRing(RATIONALS, ('p1', 'p2'))
    u = PolyRing(RATIONALS, ('u1', 'u2'))
    return p, u


def test_arithmetic_and_rendering():
    p, _ = rings()
    p1, p2 = p.variables()
    f = (p1 + p2) ** 2 - p1 * p2 * 2
    assert f == p1 ** 2 + p2 ** 2
    assert str(f) == "p1^2+p2^2"
    assert (f * 0).is_zero()
    assert (f / 2).terms[(2, 0)] == Fraction(1, 2)
    print("PASS: ring arithmetic and rendering")


def test_partial_derivatives_and_leibniz_rule():
    p, _ = rings()
    rng = random.Random(11)
    for _ in range(10):
        f = random_matrix(p, 1, rng, degree=3)[0, 0]
        g = random_matrix(p, 1, rng, degree=3)[0, 0]
        for var in ('p1', 'p2'):
            assert (f * g).partial(var) == f.partial(var) * g + f * g.partial(var)
    print("PASS: Leibniz rule on random polynomials")


def test_exact_division():
    p, _ = rings()
    p1, p2 = p.variables()
    product = (p1 - p2) * (p1 + p2 * 3) * (p1 * p2 + 1)
    assert product.exact_divide(p1 - p2) == (p1 + p2 * 3) * (p1 * p2 + 1)
    with pytest.raises(DivisibilityError):
        (p1 ** 2 + 1).exact_divide(p1 - p2)
    print("PASS: exact division and DivisibilityError")


def test_mixed_rings_rejected():
    p, u = rings()
    with pytest.raises(VariableMismatchError):
        p.var('p1') + u.var('u1')
    print("PASS: adding polynomials from different rings is rejected")


def test_evaluate_and_substitute():
    p, _ = rings()
    p1, p2 = p.variables()
    f = p1 ** 2 * p2 + 3
    assert f.evaluate([2, Fraction(1, 2)]) == 5
    assert f.substitute({'p2': p1}) == p1 ** 3 + 3
    print("PASS: evaluation and substitution")


def test_parameter_block():
    ring = PolyRing(RATIONALS, ('p1', 'p2'), ('c1',))
    p1, c1 = ring.var('p1'), ring.var('c1')
    f = p1 ** 2 * c1 + p1
    assert f.gradient() == [p1 * c1 * 2 + 1, ring.zero()]
    assert f.total_degree() == 2
    assert not f.coord_free()
    print("PASS: constants are not coordinates")


def test_determinant_and_adjugate_identity():
    p, _ = rings()
    rng = random.Random(5)
    for n in (2, 3):
        matrix = random_matrix(p, n, rng, degree=1)
        det = determinant(matrix)
        product = matrix @ adjugate(matrix)
        for i in range(n):
            for j in range(n):
                expected = det if i == j else p.zero()
                assert product[i, j] == expected
    print("PASS: A * adj(A) = det(A) * Id for random polynomial matrices")


def test_jacobian_of_power_sums():
    p, _ = rings()
    p1, p2 = p.variables()
    J = jacobian([p1 ** 2 + p2 ** 2, p1 ** 4 + p2 ** 4])
    # det J = 8 p1 p2 (p2 - p1)(p2 + p1) up to sign
    det = determinant(J)
    assert det == (p1 * p2 ** 3 - p1 ** 3 * p2) * 8
    print("PASS: det J of the B2 power sums factors over its mirrors")


def test_rational_functions():
    p, _ = rings()
    p1, p2 = p.variables()
    r = (p1 ** 2 - p2 ** 2) / (p1 - p2)
    assert isinstance(r, RationalFunction)
    assert r.reduced().as_polynomial() == p1 + p2
    print("PASS: rational function reduces to a polynomial")


def test_linear_solve_with_kernel():
    solution = linear_solve([[1, 2, 3], [2, 4, 6]], [1, 2])
    assert solution.consistent
    assert len(solution.kernel) == 2
    assert not solution.unique
    assert not linear_solve([[1, 1], [1, 1]], [0, 1]).consistent
    print("PASS: linear_solve reports kernels and inconsistency")


def test_weighted_monomials():
    assert sorted(weighted_monomials([2, 3], 6)) == [(0, 2), (3, 0)]
    assert weighted_monomials([4, 6], 14) == [(2, 1)]
    assert weighted_monomials([2, 3], 1) == []
    print("PASS: weighted monomials of a given degree")


def test_express_in_invariants():
    p, u = rings()
    p1, p2 = p.variables()
    basis = [p1 + p2, p1 * p2]
    f = p1 ** 2 + p2 ** 2
    assert express_in_invariants(f, basis, [1, 2], u) == u.var('u1') ** 2 - u.var('u2') * 2
    with pytest.raises(NotAnInvariantError):
        express_in_invariants(p1 ** 2, basis, [1, 2], u)
    print("PASS: symmetric polynomial rewritten in elementary invariants")


def test_identity_matrix():
    p, _ = rings()
    I = identity_matrix(p, 2)
    M = PolyMatrix([[p.var('p1'), p.one()], [p.zero(), p.var('p2')]])
    assert I @ M == M
    assert determinant(M) == p.var('p1') * p.var('p2')
    print("PASS: identity matrix and triangular determinant")


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
        print(f"\nFAILED: {failed} polynomial test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All polynomial tests passed!")
