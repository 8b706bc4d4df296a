#!/usr/bin/env python3
"""
End-to-end tests for the pipelines and report documents (services/pipeline.py, services/report.py).

These run the real group files; the symbolic B2 runs take a few seconds.
"""

import glob
import json
import sys
import os
import tempfile
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from services.constsolver import SolveResult
from services.errors import ConfigurationError, OrbitbookError, UnknownGroupError
from services.groups import registry_lookup
from services.pipeline import GroupRun, RunConfig, run
from services.report import (
    compare_with_golden, diff_documents, golden_name, golden_path, load_golden, render, to_json
)

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'groups')
REPORT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'reports')


def run_group(group, mode='standard', **kwargs):
    return run(RunConfig(group=group, mode=mode, data_dir=DATA_DIR, **kwargs))


def statuses(result):
    return {check['name']: check['status'] for check in result.document['checks']}


def test_standard_b2():
    result = run_group('B2')
    assert result.exit_code == 0
    assert result.status == 'pass'
    assert result.document['constants']['values'] == {'c1': '-3/4'}
    checks = statuses(result)
    for name in ('isobaric', 'flat_natural', 'flat_dual', 'compatibility', 'almost_hydro', 'unit_dual'):
        assert checks[name] == 'pass', name
    assert result.document['summary']['fail'] == 0
    print("PASS: B2 standard structure verified with c1 = -3/4")


def test_standard_g4():
    result = run_group('G4')
    assert result.exit_code == 0
    assert result.document['level'] == 'symbolic'
    print("PASS: G4 standard structure verified")


def test_not_well_generated_group_fails():
    result = run_group('G7')
    assert result.exit_code == 1
    assert result.document['summary']['status'] == 'fail'
    checks = statuses(result)
    assert checks['almost_hydro'] == 'pass'
    assert checks['compatibility'] == 'fail'
    print("PASS: G7 (equal degrees) does not carry the structure")


def test_family_b2():
    result = run_group('B2', mode='family')
    assert result.exit_code == 0
    assert 'family_flat_dual' in statuses(result)
    assert result.document['family'] is not None
    print("PASS: B2 one-parameter family verified")


def test_wdvv_mode_allowed_with_standard():
    result = run_group('B2', mode='wdvv')
    checks = statuses(result)
    assert checks['wdvv_associativity'] == 'pass'
    assert checks['wdvv_unit'] == 'pass'
    assert checks['wdvv_homogeneity'] == 'pass'
    print("PASS: wdvv mode runs for groups with a standard stage")


def test_pencil_b2():
    result = run_group('B2', mode='pencil')
    checks = statuses(result)
    assert checks['pencil_linear'] == 'pass'
    flat = [name for name in checks if name.startswith('pencil_flat[')]
    assert len(flat) == 3
    assert all(checks[name] == 'pass' for name in flat)
    assert result.document['pencil'] is not None
    print("PASS: B2 Euclidean metric gives a flat pencil in the solved coordinates")


def test_dunkl_b2():
    result = run_group('B2', mode='dunkl', level='sampled', points=2)
    checks = statuses(result)
    for name in ('mirror_factorization', 'dunkl_kohno', 'vee_system'):
        assert checks[name] == 'pass', name
    assert 'veselov_potential' in result.document['dunkl']
    print("PASS: B2 dual product is the Dunkl-Kohno product of its mirrors")


def test_reports_are_deterministic():
    first = run_group('B2', level='sampled', points=3, seed=7)
    second = run_group('B2', level='sampled', points=3, seed=7)
    assert first.document == second.document
    assert to_json(first.document) == to_json(second.document)
    assert first.document['level'] == 'sampled'
    assert first.document['seed'] == 7
    print("PASS: equal configurations give byte-identical reports")


def test_heavy_groups_default_to_sampling():
    result = run_group('B2', points=2, heavy_groups=['B2'])
    assert result.document['level'] == 'sampled'
    print("PASS: groups listed as heavy run at the sampled level")


def test_unsupported_mode():
    with pytest.raises(ConfigurationError):
        run_group('G4', mode='family')
    with pytest.raises(ConfigurationError):
        run_group('B2', mode='sample-flatness')
    print("PASS: modes outside the group's list are configuration errors")


def test_unknown_group():
    with pytest.raises(UnknownGroupError):
        run_group('G99')
    print("PASS: unknown group raises UnknownGroupError")


def test_run_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig.from_mapping({'group': 'B2', 'colour': 'blue'})
    with pytest.raises(ConfigurationError):
        RunConfig.from_mapping({'group': 'B2', 'points': 0})
    with pytest.raises(ConfigurationError):
        RunConfig.from_mapping({'group': 'B2', 'mode': 'everything'})
    with pytest.raises(ConfigurationError):
        RunConfig.from_mapping({'group': 'B2', 'params': {'m': 'three'}})
    with pytest.raises(ConfigurationError):
        RunConfig.from_mapping({'group': 'B2', 'solver': 'guess'})
    assert RunConfig.from_mapping({'group': 'B2', 'solver': 'verify'}).solver == 'verify'
    config = RunConfig.from_mapping({'group': 'G(m,1,2)', 'params': {'m': '3'}, 'seed': '5'},
                                    {'points': 4, 'data_dir': DATA_DIR})
    assert config.params == {'m': 3}
    assert config.seed == 5 and config.points == 4
    print("PASS: RunConfig.from_mapping validates and coerces options")


def test_text_rendering_and_golden_comparison():
    result = run_group('B2', level='sampled', points=2)
    text = render(result.document, 'text')
    assert text.startswith('Group B2  mode=standard  level=sampled')
    assert 'Summary:' in text
    assert json.loads(render(result.document, 'structured')) == json.loads(to_json(result.document))
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, golden_name('B2', 'standard'))
        matches, differences = compare_with_golden(result.document, path)
        assert not matches and differences
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(to_json(result.document))
        assert compare_with_golden(result.document, path) == (True, [])
        changed = dict(result.document, seed=99)
        matches, differences = compare_with_golden(changed, path)
        assert not matches
        assert differences == ["/seed: expected 20240601, found 99"]
    print("PASS: text rendering and golden report comparison")


def test_solver_verify_b2():
    result = run_group('B2', level='sampled', points=2, solver='verify')
    constants = result.document['constants']
    assert constants['solver'] == 'verify'
    assert constants['status'] == 'verified'
    assert constants['values'] == {'c1': '-3/4'}
    assert 'solutions' not in constants
    assert result.exit_code == 0
    print("PASS: --solver verify accepts the tabulated B2 constant")


def test_several_solutions_are_ambiguous():
    spec = registry_lookup('B2', data_dir=DATA_DIR)
    group_run = GroupRun(spec, RunConfig(group='B2', data_dir=DATA_DIR))
    section = {}
    result = SolveResult(['c1'], solutions=[{'c1': Fraction(-3, 4)}, {'c1': Fraction(1, 2)}])
    assert group_run.choose_solution(None, result, section) is None
    assert section['status'] == 'ambiguous'
    assert section['witness'] == 'ambiguous: 2 solutions (c1 = -3/4; c1 = 1/2)'
    print("PASS: several roots are reported as ambiguous, never resolved by the tabulated value")


def test_failed_stage_witness_names_the_action():
    spec = registry_lookup('B2', data_dir=DATA_DIR)
    group_run = GroupRun(spec, RunConfig(group='B2', data_dir=DATA_DIR))

    def broken():
        raise OrbitbookError("no fit")

    def misconfigured():
        raise ConfigurationError("bad")

    assert group_run.guarded('vector_potential', broken) is None
    assert group_run.guarded('some_new_stage', broken) is None
    records = {r['name']: r for r in group_run.checks.records}
    assert records['vector_potential']['status'] == 'fail'
    assert records['vector_potential']['witness'] == 'Failed to compute the vector potential: no fit'
    assert records['some_new_stage']['witness'] == 'Failed to some new stage: no fit'

    with pytest.raises(ConfigurationError):
        group_run.guarded('vector_potential', misconfigured)
    print("PASS: failed stages report what they were doing")


def test_pinned_golden_diff():
    actual = {'group': 'B2', 'seed': 1, 'checks': [{'name': 'a', 'status': 'pass', 'witness': ''},
                                                   {'name': 'b', 'status': 'fail', 'witness': 'x'}]}
    assert diff_documents({'checks': [{'name': 'b', 'status': 'fail'}]}, actual, pinned=True) == []
    assert diff_documents({'checks': [{'name': 'a', 'status': 'fail'}]}, actual, pinned=True) == \
        ["/checks[a]/status: expected 'fail', found 'pass'"]
    assert diff_documents({'checks': [{'name': 'c', 'status': 'pass'}]}, actual, pinned=True) == \
        ["/checks[c]: missing"]
    assert diff_documents({'group': 'B2'}, actual) == ['/checks: unexpected', '/seed: unexpected']
    print("PASS: pinned golden reports compare only what they list")


@pytest.mark.parametrize('path', sorted(glob.glob(os.path.join(REPORT_DIR, '*.json'))))
def test_committed_golden_reports(path):
    golden = load_golden(path)
    options = {k: golden[k] for k in ('level', 'points', 'seed') if k in golden}
    result = run_group(golden['group'], mode=golden['mode'], **options)
    assert golden_path(REPORT_DIR, result.document['group'], golden['mode']) == path
    matches, differences = compare_with_golden(result.document, path)
    assert matches, differences
    print(f"PASS: {os.path.basename(path)} matches a fresh run")


def test_golden_names():
    assert golden_name('B2', 'standard') == 'B2-standard.json'
    assert golden_name('G(3,1,2)', 'all') == 'G_3_1_2_-all.json'
    assert golden_name('I2(8)', 'sample-flatness') == 'I2_8_-sample-flatness.json'
    print("PASS: golden report names are file-system safe")


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
        print(f"\nFAILED: {failed} pipeline test(s) failed!")
        sys.exit(1)
    print("\nSUCCESS: All pipeline tests passed!")
