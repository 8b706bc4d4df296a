#!/usr/bin/env python3
"""
Tests for the constant solver (services/constsolver.py).

Systems here are small hand-made ones; the group pipelines exercise the
solver on real condition systems in test_pipeline.py.
"""

import sys
import os
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from services.constsolver import (
    ConditionSystem, OutsideExtension, field_sqrt, render_solution, solve_constants, sympy_roots,
    univariate_roots, verify_constants
)
from services.exprparse import render_scalar
from services.multipoly import PolyRing
from services.numberfield import RATIONALS, NumberField, rational_generator


def unknowns(field=RATIONALS, names=('c1', 'c2')):
    ring = PolyRing(field, (), names)
    return ring, [ring.var(n) for n in names]


def gaussian():
    return NumberField([rational_generator('I', [1, 0, 1], 0), rational_generator('sqrt(2)', [-2, 0, 1], 1)])


def test_linear_system_unique():
    ring, (c1, c2) = unknowns()
    system = ConditionSystem(['c1', 'c2'], [c1 + c2 * 2 - 1, c1 - c2])
    result = solve_constants(system)
    assert result.status == 'solved'
    assert result.unique == {'c1': Fraction(1, 3), 'c2': Fraction(1, 3)}
    assert render_solution(result.unique) == {'c1': '1/3', 'c2': '1/3'}
    print("PASS: linear system has the unique solution c1 = c2 = 1/3")


def test_quadratic_rational_roots():
    _, (c1,) = unknowns(names=('c1',))
    system = ConditionSystem(['c1'], [c1 ** 2 - c1 - 2])
    result = solve_constants(system)
    assert result.status == 'solved'
    assert {render_scalar(s['c1']) for s in result.solutions} == {'2', '-1'}
    assert result.unique is None
    print("PASS: c1^2 - c1 - 2 = 0 has the two roots 2 and -1")


def test_roots_need_the_field():
    _, (c1,) = unknowns(names=('c1',))
    result = solve_constants(ConditionSystem(['c1'], [c1 ** 2 + 1]))
    assert result.status == 'unresolved'
    assert result.unresolved

    K = gaussian()
    _, (d1,) = unknowns(K, ('c1',))
    result = solve_constants(ConditionSystem(['c1'], [d1 ** 2 + 1]))
    assert {render_scalar(s['c1']) for s in result.solutions} == {'I', '-I'}
    print("PASS: x^2 + 1 is unresolved over Q and splits over Q(I)")


def test_nonzero_unknowns_are_divided_out():
    _, (c1, c2) = unknowns()
    system = ConditionSystem(['c1', 'c2'], [c1 * c2 - c1])
    assert solve_constants(system).status == 'unresolved'
    result = solve_constants(system, nonzero=['c1'])
    assert result.solutions == [{'c2': 1}]
    print("PASS: nonzero unknowns never take the value 0")


def test_free_unknowns_stay_symbolic():
    ring, (c1, c2) = unknowns()
    system = ConditionSystem(['c1', 'c2'], [c2 - c1 ** 2])
    result = solve_constants(system, free=['c1'])
    assert result.status == 'solved'
    assert render_solution(result.solutions[0]) == {'c2': 'c1^2'}
    print("PASS: c2 expressed through the free constant c1")


def test_inconsistent_system():
    _, (c1,) = unknowns(names=('c1',))
    result = solve_constants(ConditionSystem(['c1'], [c1 - 1, c1 - 2]))
    assert result.status == 'inconsistent'
    assert result.solutions == []
    print("PASS: c1 = 1 and c1 = 2 is inconsistent")


def test_cubic_through_sympy():
    _, (c1,) = unknowns(names=('c1',))
    roots = univariate_roots(c1 ** 3 - c1, 'c1', RATIONALS)
    assert {render_scalar(r) for r in roots} == {'0', '1', '-1'}
    with pytest.raises(OutsideExtension):
        sympy_roots(c1 ** 3 - 2, 'c1', RATIONALS)
    print("PASS: cubic roots found by factoring, cube roots of 2 rejected")


def test_field_sqrt():
    K = gaussian()
    assert field_sqrt(Fraction(9, 4), RATIONALS) == Fraction(3, 2)
    assert field_sqrt(3, RATIONALS) is None
    assert field_sqrt(-8, K) == K.gen('I') * K.gen('sqrt(2)') * 2
    print("PASS: square roots inside the declared field")


def test_verify_constants_reports_witnesses():
    _, (c1, c2) = unknowns()
    system = ConditionSystem(['c1', 'c2'], [c1 + c2 * 2 - 1, c1 - c2], origins=['first', 'second'])
    good = verify_constants(system, {'c1': Fraction(1, 3), 'c2': Fraction(1, 3)})
    assert good.passed and good.witnesses == []
    bad = verify_constants(system, {'c1': 0, 'c2': 0})
    assert not bad.passed
    assert bad.witnesses[0].startswith('first:')
    partial = verify_constants(system, {'c1': 1})
    assert partial.unassigned == ['c2']
    print("PASS: verification names the failing conditions")


def test_duplicate_equations_collapse():
    _, (c1, c2) = unknowns()
    system = ConditionSystem(['c1', 'c2'], [c1 - c2, (c1 - c2) * 3, c1 * 0])
    assert len(system) == 1
    print("PASS: proportional and zero equations are dropped")


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
        print(f"\nFAILED: {failed} solver test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All solver tests passed!")
