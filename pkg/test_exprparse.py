#!/usr/bin/env python3
"""
Tests for the expression grammar and the group data file reader (services/exprparse.py).
"""

import sys
import os
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from services.errors import ExpressionSyntaxError, GroupFileError, UndeclaredIdentifierError
from services.exprparse import (
    ParseContext, parse_expression, parse_group_text, parse_integer, parse_scalar, render_expression,
    scalar_ring, split_top_level
)
from services.multipoly import PolyRing
from services.numberfield import RATIONALS, NumberField, rational_generator


def context(field=RATIONALS, params=(), **kwargs):
    return ParseContext(PolyRing(field, ('p1', 'p2'), params), **kwargs)


def sqrt3_field():
    return NumberField([rational_generator('I', [1, 0, 1], 0), rational_generator('sqrt(3)', [-3, 0, 1], 1)])


def test_precedence_and_powers():
    ctx = context()
    p1, p2 = ctx.ring.variables()
    assert parse_expression("-p1^2", ctx) == -(p1 ** 2)
    assert parse_expression("2*p1**3 - p2/4", ctx) == p1 ** 3 * 2 - p2 / 4
    assert parse_expression("(p1 + p2)^(2*2)", ctx) == (p1 + p2) ** 4
    assert parse_expression("1/2*p1*3", ctx) == p1 * Fraction(3, 2)
    print("PASS: precedence, unary minus and both power spellings")


def test_round_trip_through_rendering():
    ctx = context(sqrt3_field())
    text = "p1^4 + 2*I*sqrt(3)*p1^2*p2^2 + p2^4"
    poly = parse_expression(text, ctx)
    assert parse_expression(render_expression(poly), ctx) == poly
    assert render_expression(poly) == "p1^4+2*I*sqrt(3)*p1^2*p2^2+p2^4"
    print("PASS: render(parse(text)) parses back to the same polynomial")


def test_chained_exponent_rejected():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("p1^2^3", context())
    print("PASS: chained ^ needs parentheses")


def test_division_by_polynomial_rejected():
    with pytest.raises(ExpressionSyntaxError):
        parse_expression("p1/p2", context())
    print("PASS: division only by constants")


def test_error_positions():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("p1 + $", context())
    assert info.value.line == 1
    assert info.value.column == 6
    with pytest.raises(UndeclaredIdentifierError) as info:
        parse_expression("p1 + q", context())
    assert info.value.column == 6
    print("PASS: errors carry line and column")


def test_sqrt_needs_declared_generator():
    with pytest.raises(UndeclaredIdentifierError):
        parse_expression("sqrt(3)*p1", context())
    ctx = context(sqrt3_field())
    value = parse_scalar("sqrt(12)/2", ctx)
    assert value == ctx.field.gen('sqrt(3)')
    assert parse_scalar("sqrt(4)", ctx) == 2
    print("PASS: sqrt(k) resolves to declared generators")


def test_bindings_and_constants():
    ctx = context(params=('c1',), bindings={'m': 3})
    p1, c1 = ctx.ring.var('p1'), ctx.ring.var('c1')
    assert parse_expression("p1^m + c1*p1^(2*m)", ctx) == p1 ** 3 + c1 * p1 ** 6
    assert parse_integer("3*m+3", {'m': 4}) == 15
    with pytest.raises(ExpressionSyntaxError):
        parse_integer("m/2", {'m': 3})
    print("PASS: integer parameters bind in expressions and exponents")


def test_det_hessian():
    ctx = context()
    p1, p2 = ctx.ring.variables()
    assert parse_expression("det_hessian(p1^2*p2)", ctx) == -(p1 ** 2) * 4
    print("PASS: det_hessian of p1^2*p2")


def test_split_top_level():
    assert split_top_level("1, (2, 3), f(a, b)") == ["1", "(2, 3)", "f(a, b)"]
    assert split_top_level("c2 = 3*c1 ; c3 = 1", ';') == ["c2 = 3*c1", "c3 = 1"]
    print("PASS: top-level splitting ignores nested separators")


GROUP_TEXT = """
# comment line
[meta]
name = Toy   # trailing comment
rank = 2

[invariants]
U1 = p1^2
    + p2^2
U2 = p1^4 + p2^4

[mirrors]
2 : 1, 0
for r in 1..2 : 2 : 1, r
"""


def test_group_text_sections_and_continuations():
    document = parse_group_text(GROUP_TEXT, 'toy.grp')
    assert document.mapping('meta') == {'name': 'Toy', 'rank': '2'}
    assert document.get('invariants', 'U1') == "p1^2 + p2^2"
    mirrors = document.section('mirrors')
    assert [m.value for m in mirrors] == ["2 : 1, 0", "for r in 1..2 : 2 : 1, r"]
    assert not document.has('family')
    print("PASS: sections, comments and continuation lines")


def test_content_before_section_rejected():
    with pytest.raises(GroupFileError):
        parse_group_text("rank = 2\n[meta]\n")
    print("PASS: content before the first section is rejected")


def test_scalar_ring_has_no_coordinates():
    ring = scalar_ring(RATIONALS)
    assert ring.coords == ()
    assert parse_scalar("7/3 - 1", ParseContext(ring)) == Fraction(4, 3)
    print("PASS: scalar expressions evaluate in the coordinate-free ring")


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
        print(f"\nFAILED: {failed} parser test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All parser tests passed!")
