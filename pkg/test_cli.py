#!/usr/bin/env python3
"""
Tests for the command-line surface (blueprints/cli_bp.py) through Flask's CLI runner.

Exit codes: 0 pass, 1 check failure or golden mismatch, 2 configuration error.
"""

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(__file__))
os.environ.setdefault('ORBITBOOK_DATABASE_PATH', os.path.join(tempfile.mkdtemp(), 'orbitbook-test.db'))

import pytest

from app import app

DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'groups')


@pytest.fixture
def runner(tmp_path):
    app.config.update(TESTING=True, DATABASE=str(tmp_path / 'runs.db'), DATA_DIR=DATA_DIR,
                      REPORT_DIR=str(tmp_path / 'reports'))
    return app.test_cli_runner()


def test_list_groups(runner):
    result = runner.invoke(args=['list-groups'])
    assert result.exit_code == 0
    assert result.output.splitlines()[0].split() == ['name', 'rank', 'degrees', 'mirrors', 'modes']
    assert any(line.startswith('B2 ') for line in result.output.splitlines())

    result = runner.invoke(args=['list-groups', '--format', 'structured'])
    rows = json.loads(result.output)
    assert {row['name'] for row in rows} >= {'A3', 'B2', 'G26', 'G(m,1,3)'}
    print("PASS: list-groups in text and structured form")


def test_verify_passes_and_prints_report(runner):
    result = runner.invoke(args=['verify', '--group', 'B2', '--level', 'sampled', '--points', '2',
                                 '--format', 'text'])
    assert result.exit_code == 0, result.output
    assert 'Summary:' in result.output
    assert 'PASS' in result.output

    result = runner.invoke(args=['verify', '--group', 'B2', '--level', 'sampled', '--points', '2'])
    document = json.loads(result.output)
    assert document['summary']['exit_code'] == 0
    print("PASS: verify exits 0 for B2")


def test_verify_failure_exit_code(runner):
    result = runner.invoke(args=['verify', '--group', 'G7'])
    assert result.exit_code == 1
    print("PASS: verify exits 1 when a check fails")


@pytest.mark.parametrize('args', [
    ['verify', '--group', 'G99'],
    ['verify', '--group', 'G4', '--mode', 'family'],
    ['verify', '--group', 'G(m,1,2)'],
    ['verify', '--group', 'G(m,1,2)', '--param', 'm'],
    ['verify', '--group', 'B2', '--data-dir', '/nonexistent/groups'],
    ['mirrors', '--group', 'G99'],
    ['verify', '--group', 'B2', '--solver', 'guess'],
])
def test_configuration_errors_exit_2(runner, args):
    result = runner.invoke(args=args)
    assert result.exit_code == 2
    assert 'Error:' in result.output
    print(f"PASS: {' '.join(args)} exits 2")


def test_compute_omits_checks(runner):
    result = runner.invoke(args=['compute', '--group', 'B2', '--level', 'sampled', '--points', '2'])
    assert result.exit_code == 0
    document = json.loads(result.output)
    assert document['checks'] == []
    assert document['constants']['values'] == {'c1': '-3/4'}
    assert 'dunkl' not in document
    print("PASS: compute prints the computed objects only")


def test_solver_option(runner):
    args = ['compute', '--group', 'B2', '--level', 'sampled', '--points', '2']
    result = runner.invoke(args=args + ['--solver', 'verify'])
    assert result.exit_code == 0, result.output
    constants = json.loads(result.output)['constants']
    assert constants['solver'] == 'verify'
    assert constants['status'] == 'verified'
    assert constants['values'] == {'c1': '-3/4'}

    result = runner.invoke(args=args + ['--solver', 'solve'])
    constants = json.loads(result.output)['constants']
    assert constants['solver'] == 'solve'
    assert constants['status'] == 'solved'
    assert constants['solutions'] == [{'c1': '-3/4'}]
    print("PASS: --solver verify checks the tabulated constants, --solver solve derives them")


def test_mirrors_command(runner):
    result = runner.invoke(args=['mirrors', '--group', 'B2'])
    assert result.exit_code == 0
    assert 'Mirrors of B2: 4' in result.output
    assert 'det J factorization: pass' in result.output

    result = runner.invoke(args=['mirrors', '--group', 'G(m,1,2)', '--param', 'm=3', '--format', 'structured'])
    description = json.loads(result.output)
    assert description['group'] == 'G(3,1,2)'
    assert [row['order'] for row in description['mirrors']] == [3, 3, 2, 2, 2]
    print("PASS: mirrors prints covectors and the det J check")


def test_report_update_then_compare(runner, tmp_path):
    args = ['report', '--group', 'B2', '--level', 'sampled', '--points', '2']
    result = runner.invoke(args=args)
    assert result.exit_code == 1
    assert 'no golden report' in result.output

    result = runner.invoke(args=args + ['--update'])
    assert result.exit_code == 0
    assert (tmp_path / 'reports' / 'B2-standard.json').exists()

    result = runner.invoke(args=args)
    assert result.exit_code == 0
    assert 'Report matches' in result.output

    result = runner.invoke(args=args[:-1] + ['3'])
    assert result.exit_code == 1
    assert 'Report differs from' in result.output
    print("PASS: report compares against the golden file")


def test_out_and_record(runner, tmp_path):
    out = tmp_path / 'b2.txt'
    result = runner.invoke(args=['verify', '--group', 'B2', '--level', 'sampled', '--points', '2',
                                 '--format', 'text', '--out', str(out), '--record'])
    assert result.exit_code == 0
    assert out.read_text(encoding='utf-8').startswith('Group B2')
    assert 'Recorded run 1' in result.output
    print("PASS: --out writes the report and --record stores the run")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, '-v']))
