#!/usr/bin/env python3
"""
Tests for the generalized WDVV checks (services/wdvv.py) and Frobenius detection (services/potentials.py).
"""

import sys
import os

sys.path.insert(0, os.path.dirname(__file__))

from services.exprparse import ParseContext, parse_expression
from services.multipoly import PolyRing
from services.numberfield import RATIONALS
from services.potentials import VectorPotential, frobenius_detect, integrate_structure_constants
from services.wdvv import wdvv_check

U2 = PolyRing(RATIONALS, ('u1', 'u2'))
U3 = PolyRing(RATIONALS, ('u1', 'u2', 'u3'))


def potential(ring, *texts):
    context = ParseContext(ring)
    return VectorPotential([parse_expression(t, context) for t in texts])


def b2_potential():
    # the B2 family at c1 = -3/4
    return potential(U2, "u1*u2", "1/48*u1^4 + 1/2*u2^2")


def test_b2_potential_passes():
    report = wdvv_check(b2_potential(), [2, 4])
    assert report.passed
    assert [c['status'] for c in report.checks()] == ['pass', 'pass', 'pass']
    assert report.render()['weights'] == ['1/2', '1']
    print("PASS: B2 vector potential satisfies the WDVV system")


def test_family_passes_identically_in_the_parameter():
    ring = U2.with_params(('c1',))
    A = potential(ring, "-(2/3*c1 + 1/2)*u1^3 + u1*u2", "-1/6*(2*c1^2 + 3*c1 + 1)*u1^4 + 1/2*u2^2")
    assert wdvv_check(A, [2, 4]).passed
    print("PASS: the B2 family potential passes for every c1")


def test_wrong_degree_breaks_homogeneity():
    report = wdvv_check(potential(U2, "u1*u2", "1/48*u1^5 + 1/2*u2^2"), [2, 4])
    assert not report.passed
    assert report.homogeneity['A2']
    assert not report.homogeneity['A1']
    print("PASS: a term of the wrong weight fails homogeneity only")


def test_wrong_unit_normalization():
    report = wdvv_check(potential(U2, "2*u1*u2", "1/48*u1^4 + 1/2*u2^2"), [2, 4])
    assert report.unit.startswith('unit[1,1]')
    print("PASS: d2 d1 A1 = 2 violates the unit normalization")


def test_non_associative_algebra():
    # e2*e2 = e1 and e1*e1 = e3 with unit e3: (e2 e2) e1 != e2 (e2 e1)
    A = potential(U3, "u1*u3 + 1/2*u2^2", "u2*u3", "1/2*u3^2 + 1/2*u1^2")
    report = wdvv_check(A, [1, 1, 1])
    assert report.associativity.startswith('assoc[')
    assert not report.unit
    assert not any(report.homogeneity.values())
    print("PASS: a commutative non-associative product is caught")


def test_structure_constants_integrate_back():
    A = b2_potential()
    c = A.structure_constants()
    rebuilt = integrate_structure_constants(c, U2)
    assert [a.drop_affine() for a in rebuilt.A] == [a.drop_affine() for a in A.A]
    print("PASS: potential recovered from its second derivatives")


def test_frobenius_detection_b2():
    A = b2_potential()
    candidate = frobenius_detect(A.structure_constants(), [2, 4], U2)
    assert candidate is not None
    assert candidate.eta[0][0] == 0 and candidate.eta[1][1] == 0
    assert candidate.eta[0][1] == candidate.eta[1][0] != 0
    assert candidate.D == 6
    print("PASS: B2 product is Frobenius for an antidiagonal metric of charge 6")


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
        print(f"\nFAILED: {failed} WDVV test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All WDVV tests passed!")
