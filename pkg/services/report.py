"""
Report documents for pipeline runs.

This module handles:
- Assembling the report document from the checks and result sections
- Structured (JSON) and text renderings
- Golden report paths and comparison against a committed report
- Group and mirror descriptions shared by the command line and the JSON API
"""

import json
import os
import re

from .errors import FactorizationMismatchError, MirrorClosureError
from .exprparse import render_expression, render_scalar
from .groups import verify_mirror_factorization

SECTIONS = ('constants', 'family', 'potentials', 'frobenius', 'mirrors', 'dunkl', 'pencil', 'wdvv')


def build_document(spec, config, level, checks, sections, summary):
    """The report as a plain dict; no timestamps, so equal configurations give equal documents."""
    document = {
        'group': spec.name,
        'mode': config.mode,
        'level': level,
        'seed': config.seed,
        'points': config.points,
        'degrees': list(spec.degrees),
        'checks': list(checks),
        'summary': dict(summary),
    }
    for name in SECTIONS:
        document[name] = sections.get(name)
    return document


def to_json(document):
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + '\n'


def to_text(document):
    """Readable rendering of the same content."""
    lines = [f"Group {document['group']}  mode={document['mode']}  level={document['level']}"]
    if document.get('seed') is not None:
        lines.append(f"seed={document['seed']}  points={document.get('points')}")
    lines.append('')
    lines.append('Checks')
    for check in document['checks']:
        line = f"  [{check['status'].upper():7}] {check['name']}"
        if check.get('witness'):
            line += f"  ({check['witness']})"
        lines.append(line)
    for name in SECTIONS:
        value = document.get(name)
        if value:
            lines.append('')
            lines.append(name.capitalize())
            lines.extend(_text_block(value, 1))
    summary = document['summary']
    lines.append('')
    lines.append(f"Summary: {summary.get('pass', 0)} passed, {summary.get('fail', 0)} failed, "
                 f"{summary.get('skipped', 0)} skipped -> {summary['status'].upper()}")
    return '\n'.join(lines) + '\n'


def _text_block(value, depth):
    pad = '  ' * depth
    out = []
    if isinstance(value, dict):
        for key in sorted(value):
            item = value[key]
            if isinstance(item, (dict, list)) and item and not _flat_list(item):
                out.append(f"{pad}{key}:")
                out.extend(_text_block(item, depth + 1))
            else:
                out.append(f"{pad}{key}: {_inline(item)}")
    elif isinstance(value, list):
        for item in value:
            if isinstance(item, (dict, list)) and not _flat_list(item):
                out.append(f"{pad}-")
                out.extend(_text_block(item, depth + 1))
            else:
                out.append(f"{pad}- {_inline(item)}")
    else:
        out.append(f"{pad}{_inline(value)}")
    return out


def _flat_list(value):
    return isinstance(value, list) and all(not isinstance(v, dict) for v in value)


def _inline(value):
    if isinstance(value, list):
        return '[' + ', '.join(_inline(v) for v in value) + ']'
    if value is None:
        return '-'
    return str(value)


def render(document, output_format='structured'):
    return to_json(document) if output_format == 'structured' else to_text(document)


# Golden reports
def golden_name(group, mode):
    stem = re.sub(r'[^A-Za-z0-9_.-]+', '_', f"{group}-{mode}").strip('_')
    return f"{stem}.json"


def golden_path(report_dir, group, mode):
    return os.path.join(report_dir, golden_name(group, mode))


def load_golden(path):
    with open(path, encoding='utf-8') as handle:
        return json.load(handle)


def diff_documents(expected, actual, path='', pinned=False):
    """
    Paths where two documents differ (first 20).

    With pinned=True only what expected lists is compared: extra keys in
    actual are ignored and lists of named records (checks) match by name.
    """
    out = []
    if isinstance(expected, dict) and isinstance(actual, dict):
        keys = sorted(expected) if pinned else sorted(set(expected) | set(actual))
        for key in keys:
            if key not in actual:
                out.append(f"{path}/{key}: missing")
            elif key not in expected:
                out.append(f"{path}/{key}: unexpected")
            else:
                out.extend(diff_documents(expected[key], actual[key], f"{path}/{key}", pinned))
    elif isinstance(expected, list) and isinstance(actual, list):
        if pinned and _named_records(expected) and _named_records(actual):
            by_name = {item['name']: item for item in actual}
            for item in expected:
                if item['name'] not in by_name:
                    out.append(f"{path}[{item['name']}]: missing")
                else:
                    out.extend(diff_documents(item, by_name[item['name']], f"{path}[{item['name']}]", pinned))
            return out[:20]
        if len(expected) != len(actual):
            out.append(f"{path}: {len(expected)} item(s) expected, {len(actual)} found")
        for i, (a, b) in enumerate(zip(expected, actual)):
            out.extend(diff_documents(a, b, f"{path}[{i}]", pinned))
    elif expected != actual:
        out.append(f"{path}: expected {expected!r}, found {actual!r}")
    return out[:20]


def _named_records(items):
    return all(isinstance(item, dict) and 'name' in item for item in items)


def compare_with_golden(document, path):
    """
    (matches, differences); a missing golden file is a difference.

    A golden report carrying "pinned": true holds a hand-kept subset of the
    document and is compared on that subset only.
    """
    if not os.path.exists(path):
        return False, [f"no golden report at {path}"]
    expected = load_golden(path)
    pinned = bool(expected.pop('pinned', False))
    actual = json.loads(to_json(document))
    differences = diff_documents(expected, actual, pinned=pinned)
    return not differences, differences


# Group descriptions
def describe_group(spec):
    return {
        'name': spec.name,
        'rank': spec.rank,
        'degrees': list(spec.degrees),
        'field': repr(spec.field),
        'parameters': {k: v for k, v in sorted(spec.params.items())},
        'modes': list(spec.modes),
        'well_generated': spec.well_generated,
        'heavy': spec.heavy,
        'description': spec.description,
        'invariants': {f"U{i + 1}": render_expression(u) for i, u in enumerate(spec.base_invariants)},
        'constants': list(spec.constants),
        'mirrors': spec.mirror_count,
        'frobenius_reported': spec.reported.frobenius,
    }


def describe_mirrors(spec):
    """Covectors with orders, plus the det J factorization check."""
    try:
        mirrors = spec.mirrors
    except MirrorClosureError as e:
        return {'group': spec.name, 'mirrors': [], 'declared': len(spec.declared_mirrors),
                'factorization': {'status': 'fail', 'witness': f"Failed to close the mirror arrangement: {e}"}}
    rows = [{'index': i + 1, 'order': m.order, 'covector': [render_scalar(c) for c in m.covector]}
            for i, m in enumerate(mirrors)]
    if not mirrors:
        factorization = {'status': 'skipped', 'witness': 'no mirror covectors in the group file'}
    else:
        try:
            result = verify_mirror_factorization(spec)
            factorization = {'status': 'pass', 'constant': render_scalar(result.constant),
                             'multiplicities': result.multiplicities}
        except FactorizationMismatchError as e:
            factorization = {'status': 'fail', 'witness': str(e), 'mirror': e.mirror}
    return {'group': spec.name, 'mirrors': rows, 'factorization': factorization}
