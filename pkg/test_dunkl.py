#!/usr/bin/env python3
"""
Tests for mirror arrangements, normalization, vee-systems and family corrections (services/dunkl.py).
"""

import sys
import os

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from services.dunkl import (
    Arrangement, family_correction, normalization_sum, projection, scalar_wdvv_potential, vee_system_check,
    veselov_potential
)
from services.errors import DegenerateFormError, InvalidFamilyError, IsotropicCovectorError
from services.groups import Mirror, registry_lookup
from services.multipoly import PolyRing
from services.numberfield import RATIONALS, NumberField, rational_generator

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'groups')


def arrangement(name):
    return Arrangement.from_spec(registry_lookup(name, data_dir=DATA_DIR))


def matmul(a, b, zero):
    n = len(a)
    return [[sum((a[i][l] * b[l][j] for l in range(n)), zero) for j in range(n)] for i in range(n)]


def test_projections_are_idempotent_with_trace_one():
    for name in ('B2', 'A3', 'G4'):
        arr = arrangement(name)
        zero = arr.field.zero
        for mirror in arr.mirrors:
            pi = arr.projection(mirror.covector)
            assert matmul(pi, pi, zero) == pi
            assert sum((pi[i][i] for i in range(arr.n)), zero) == 1
    print("PASS: every projection is idempotent of trace 1 (B2, A3, G4)")


def test_projection_is_scale_invariant():
    arr = arrangement('G4')
    K = arr.field
    scale = K.gen('I') + 2
    alpha = arr.mirrors[0].covector
    assert arr.projection([a * scale for a in alpha]) == arr.projection(alpha)
    print("PASS: rescaling a covector leaves its projection unchanged")


@pytest.mark.parametrize('name', ['B2', 'A3'])
def test_normalization_with_orders(name):
    _, N = normalization_sum(arrangement(name))
    # projections of an irreducible real group sum to (M/n) * Id; order weights double it
    assert N == 4
    print(f"PASS: sum of order-weighted projections of {name} is 4 * Id")


def test_non_scalar_sum_reports_none():
    arr = Arrangement([Mirror([1, 0], 2), Mirror([1, 1], 2)], [[1, 0], [0, 1]], RATIONALS)
    total, N = normalization_sum(arr)
    assert N is None
    assert total[0][1] == 1
    print("PASS: a sum that is not a multiple of Id gives N = None")


def test_isotropic_covector():
    arr = Arrangement([], [[0, 1], [1, 0]], RATIONALS)
    with pytest.raises(IsotropicCovectorError):
        arr.norm([1, 0])
    with pytest.raises(IsotropicCovectorError):
        projection([0, 1], [[0, 1], [1, 0]], RATIONALS)
    print("PASS: isotropic covectors are rejected")


def test_metric_must_be_hermitian():
    K = NumberField([rational_generator('I', [1, 0, 1], 0)])
    i = K.gen('I')
    with pytest.raises(DegenerateFormError):
        Arrangement([], [[1, i], [i, 1]], K)
    Arrangement([], [[1, i], [-i, 2]], K)
    print("PASS: the metric must equal its conjugate transpose")


def test_vee_system_b2():
    arr = arrangement('B2')
    report = vee_system_check([m.covector for m in arr.mirrors], arr.field)
    assert report.passed
    assert report.plane_passed
    assert report.planes_checked == 1
    print("PASS: B2 roots form a vee-system")


def test_vee_system_a3_planes():
    arr = arrangement('A3')
    report = vee_system_check([m.covector for m in arr.mirrors], arr.field)
    assert report.passed
    assert report.plane_passed
    print("PASS: A3 roots pass flatness and every plane condition")


def test_generic_covectors_are_not_a_vee_system():
    report = vee_system_check([[1, 0], [0, 1], [1, 2]], RATIONALS)
    assert not report.passed
    assert report.witness
    print("PASS: three generic covectors in the plane fail flatness")


def test_degenerate_vee_form():
    with pytest.raises(DegenerateFormError):
        vee_system_check([[1, 1], [2, 2]], RATIONALS)
    print("PASS: collinear covectors give a degenerate form")


def test_family_correction_b2():
    spec = registry_lookup('B2', data_dir=DATA_DIR)
    arr = Arrangement.from_spec(spec)
    terms = family_correction(arr, spec.family.correction_for(spec.mirrors))
    assert len(terms) == 4
    with pytest.raises(InvalidFamilyError):
        family_correction(arr, [1, 1, 1, 1])
    with pytest.raises(InvalidFamilyError):
        family_correction(arr, [1, -1])
    print("PASS: B2 correction 1, 1, -1, -1 has vanishing projection sum")


def test_potentials_render():
    arr = Arrangement([], [[1, 0], [0, 1]], RATIONALS)
    ring = PolyRing(RATIONALS, ('p1', 'p2'))
    assert veselov_potential(arr).render(ring) == ['0', '0']
    scalar = scalar_wdvv_potential([[1, 0], [0, 1], [1, 1], [1, -1]], RATIONALS)
    assert scalar.render(ring).startswith("1/2*(p1)^2*log(p1)")
    print("PASS: logarithmic potentials render per mirror")


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith('test_') and not hasattr(v, 'pytestmark')]
    failed = 0
    for test in tests:
        try:
            test()
        except Exception as e:
            failed += 1
            print(f"FAIL: {test.__name__}: {e}")
    if failed:
        print(f"\nFAILED: {failed} arrangement test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All arrangement tests passed! (run under pytest for the parametrized cases)")
