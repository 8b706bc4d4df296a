"""
Command-line Blueprint - list-groups, verify, compute, mirrors and report

Commands register at the top level of the flask command group
(flask --app app verify --group G26) and are wrapped by cli.py as the
stand-alone orbitbook entry point.

Exit codes: 0 all selected checks pass, 1 a check failed (or the golden
report differs), 2 configuration error (unknown group, bad group file,
bad option, missing file).
"""
import json
import sys

import click
from flask import Blueprint, current_app

from db.database import init_db
from db.queries import log_run
from services.constsolver import SOLVER_MODES
from services.errors import ConfigurationError
from services.groups import list_groups, registry_lookup
from services.pipeline import FORMATS, LEVELS, MODES, RunConfig, defaults_from_config, run
from services.report import (
    compare_with_golden, describe_mirrors, golden_path, render, to_json
)
from utils.file_utils import write_report

# Create the blueprint
orbit_bp = Blueprint('orbit', __name__, cli_group=None)

COMPUTED_SECTIONS = ('constants', 'family', 'potentials', 'frobenius', 'pencil')


def _fail_configuration(e):
    click.echo(f"Error: {e}", err=True)
    sys.exit(2)


def _parse_params(pairs):
    params = {}
    for pair in pairs:
        key, sep, value = pair.partition('=')
        if not sep or not key.strip():
            raise ConfigurationError(f"--param expects name=value, got {pair!r}")
        params[key.strip()] = value.strip()
    return params


def _run_config(group, mode, level, points, seed, data_dir, output_format, params, solver=None):
    options = {
        'group': group, 'mode': mode, 'level': level, 'points': points, 'seed': seed,
        'data_dir': data_dir, 'output_format': output_format, 'params': _parse_params(params),
        'solver': solver,
    }
    return RunConfig.from_mapping(options, defaults_from_config(current_app.config))


def _emit(text, out):
    if out:
        write_report(out, text)
        click.echo(f"Report written to {out}", err=True)
    else:
        click.echo(text, nl=False)


def _record(result):
    init_db()
    run_id = log_run(result.document, result.exit_code)
    if run_id is not None:
        click.echo(f"Recorded run {run_id}", err=True)


def run_options(command):
    """Options shared by verify, compute and report."""
    options = [
        click.option('--group', required=True, help='Group name, e.g. G26, B3, I2(8), G(3,1,2)'),
        click.option('--mode', type=click.Choice(MODES), default='standard', show_default=True),
        click.option('--level', type=click.Choice(LEVELS), default=None,
                     help='Verification level (default: sampled for heavy groups, else ORBITBOOK_DEFAULT_LEVEL)'),
        click.option('--points', type=int, default=None, help='Sample points for the sampled level'),
        click.option('--seed', type=int, default=None, help='Random seed for sample points'),
        click.option('--data-dir', default=None, help='Directory of *.grp group files'),
        click.option('--format', 'output_format', type=click.Choice(FORMATS), default='structured',
                     show_default=True),
        click.option('--param', 'params', multiple=True, help='Integer group parameter, e.g. m=3'),
        click.option('--solver', type=click.Choice(SOLVER_MODES), default=None,
                     help='solve the ansatz constants, or verify the tabulated ones (default: solve;'
                          ' verify for sample-flatness groups)'),
        click.option('--out', default=None, help='Write the report to this file'),
        click.option('--record', is_flag=True, help='Store the run in the run history database'),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@orbit_bp.cli.command('list-groups')
@click.option('--data-dir', default=None, help='Directory of *.grp group files')
@click.option('--format', 'output_format', type=click.Choice(FORMATS), default='text', show_default=True)
def list_groups_command(data_dir, output_format):
    """List registered groups with rank, degrees and mirror counts."""
    try:
        rows = list_groups(data_dir or current_app.config['DATA_DIR'])
    except (ConfigurationError, OSError) as e:
        _fail_configuration(e)
    if output_format == 'structured':
        click.echo(json.dumps(rows, sort_keys=True, indent=2))
        return
    click.echo(f"{'name':<12} {'rank':>4}  {'degrees':<14} {'mirrors':>7}  modes")
    for row in rows:
        mirrors = '-' if row['mirrors'] is None else row['mirrors']
        click.echo(f"{row['name']:<12} {str(row['rank']):>4}  {str(row['degrees']):<14} {mirrors!s:>7}  "
                   f"{row['modes']}")


def _execute(group, mode, level, points, seed, data_dir, output_format, params, record, solver=None):
    try:
        config = _run_config(group, mode, level, points, seed, data_dir, output_format, params, solver)
        result = run(config)
    except (ConfigurationError, OSError) as e:
        _fail_configuration(e)
    if record:
        _record(result)
    return config, result


@orbit_bp.cli.command('verify')
@run_options
def verify_command(group, mode, level, points, seed, data_dir, output_format, params, solver, out, record):
    """Run the selected pipelines and print the full report."""
    config, result = _execute(group, mode, level, points, seed, data_dir, output_format, params, record, solver)
    _emit(render(result.document, config.output_format), out)
    sys.exit(result.exit_code)


@orbit_bp.cli.command('compute')
@run_options
def compute_command(group, mode, level, points, seed, data_dir, output_format, params, solver, out, record):
    """Print the computed objects only: constants, family data, potentials, Frobenius and pencil."""
    config, result = _execute(group, mode, level, points, seed, data_dir, output_format, params, record, solver)
    document = result.document
    computed = {key: document[key] for key in ('group', 'mode', 'level', 'seed', 'points', 'degrees')}
    for name in COMPUTED_SECTIONS:
        computed[name] = document.get(name)
    computed['checks'] = []
    computed['summary'] = document['summary']
    _emit(render(computed, config.output_format), out)
    sys.exit(result.exit_code)


@orbit_bp.cli.command('mirrors')
@click.option('--group', required=True)
@click.option('--data-dir', default=None)
@click.option('--param', 'params', multiple=True, help='Integer group parameter, e.g. m=3')
@click.option('--format', 'output_format', type=click.Choice(FORMATS), default='text', show_default=True)
def mirrors_command(group, data_dir, params, output_format):
    """Print mirror covectors and check det J against them."""
    try:
        parsed = {k: int(v) for k, v in _parse_params(params).items()}
        spec = registry_lookup(group, parsed, data_dir or current_app.config['DATA_DIR'])
    except ValueError as e:
        _fail_configuration(f"invalid --param value: {e}")
    except (ConfigurationError, OSError) as e:
        _fail_configuration(e)
    description = describe_mirrors(spec)
    if output_format == 'structured':
        click.echo(json.dumps(description, sort_keys=True, indent=2))
    else:
        click.echo(f"Mirrors of {spec.name}: {len(description['mirrors'])}")
        for row in description['mirrors']:
            click.echo(f"  {row['index']:>3}  order {row['order']}  ({', '.join(row['covector'])})")
        factorization = description['factorization']
        detail = factorization.get('witness') or f"constant {factorization.get('constant')}"
        click.echo(f"det J factorization: {factorization['status']} ({detail})")
    sys.exit(1 if description['factorization']['status'] == 'fail' else 0)


@orbit_bp.cli.command('report')
@run_options
@click.option('--report-dir', default=None, help='Golden report directory (default ORBITBOOK_REPORT_DIR)')
@click.option('--update', is_flag=True, help='Overwrite the golden report with this run')
def report_command(group, mode, level, points, seed, data_dir, output_format, params, solver, out, record,
                   report_dir, update):
    """Compare a fresh run with its committed golden report; exit 1 on any difference."""
    config, result = _execute(group, mode, level, points, seed, data_dir, output_format, params, record, solver)
    path = golden_path(report_dir or current_app.config['REPORT_DIR'], result.document['group'], config.mode)
    if out:
        write_report(out, render(result.document, config.output_format))
    if update:
        write_report(path, to_json(result.document))
        click.echo(f"Golden report updated: {path}")
        sys.exit(0)
    matches, differences = compare_with_golden(result.document, path)
    if matches:
        click.echo(f"Report matches {path}")
        sys.exit(0)
    click.echo(f"Report differs from {path}:")
    for difference in differences:
        click.echo(f"  {difference}")
    sys.exit(1)
