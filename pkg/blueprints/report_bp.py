"""
Report Blueprint - JSON endpoints for groups and pipeline runs
"""
import json

from flask import Blueprint, current_app, jsonify, request

from db.queries import get_run_by_id, get_runs, log_run
from services.errors import ConfigurationError, UnknownGroupError
from services.groups import list_groups, registry_lookup
from services.pipeline import RunConfig, defaults_from_config, run
from services.report import describe_group, describe_mirrors

# Create the blueprint
report_bp = Blueprint('report', __name__)


def _lookup(name):
    params = {k: int(v) for k, v in request.args.items() if k != 'format'}
    return registry_lookup(name, params, current_app.config['DATA_DIR'])


@report_bp.route('/groups')
def groups():
    """Registered groups with rank, degrees and mirror counts"""
    try:
        return jsonify({'groups': list_groups(current_app.config['DATA_DIR'])})
    except ConfigurationError as e:
        return jsonify({'error': str(e)}), 400


@report_bp.route('/groups/<name>')
def group_detail(name):
    """One group: degrees, field, basic invariants, modes"""
    try:
        return jsonify(describe_group(_lookup(name)))
    except UnknownGroupError as e:
        return jsonify({'error': str(e)}), 404
    except (ConfigurationError, ValueError) as e:
        return jsonify({'error': str(e)}), 400


@report_bp.route('/groups/<name>/mirrors')
def group_mirrors(name):
    """Mirror covectors and the det J factorization check"""
    try:
        return jsonify(describe_mirrors(_lookup(name)))
    except UnknownGroupError as e:
        return jsonify({'error': str(e)}), 404
    except (ConfigurationError, ValueError) as e:
        return jsonify({'error': str(e)}), 400


@report_bp.route('/runs', methods=['POST'])
def create_run():
    """Run the pipelines for the RunConfig in the body; the run is always recorded"""
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return jsonify({'error': 'Expected a JSON object with RunConfig fields'}), 400

    try:
        config = RunConfig.from_mapping(data, defaults_from_config(current_app.config))
        result = run(config)
    except UnknownGroupError as e:
        return jsonify({'error': str(e)}), 404
    except ConfigurationError as e:
        return jsonify({'error': str(e)}), 400
    except Exception as e:
        current_app.logger.error(f"Failed to run {data.get('group')}: {e}")
        return jsonify({'error': str(e)}), 500

    run_id = log_run(result.document, result.exit_code)
    return jsonify({'id': run_id, 'exit_code': result.exit_code, 'report': result.document})


@report_bp.route('/runs')
def runs():
    """Run history, newest first"""
    try:
        limit = int(request.args.get('limit', 100))
    except ValueError:
        return jsonify({'error': 'limit must be an integer'}), 400
    rows = get_runs(limit, request.args.get('group'))
    return jsonify({'runs': [dict(row) for row in rows]})


@report_bp.route('/runs/<int:run_id>')
def run_detail(run_id):
    """One stored run including its report document"""
    row = get_run_by_id(run_id)
    if row is None:
        return jsonify({'error': 'Run not found'}), 404
    entry = dict(row)
    entry['report'] = json.loads(entry.pop('report_json') or 'null')
    return jsonify(entry)
