"""
Database query operations for the Orbitbook run history.

This module contains all functions that read and write the runs table.
"""

import json
from flask import current_app
from .database import get_db
from utils.timezone_utils import get_pacific_now


# Run History
def log_run(document, exit_code):
    """Store a finished run; returns the new row id (None on failure)"""
    try:
        db = get_db()
        cursor = db.execute('''INSERT INTO runs
                     (group_name, mode, level, seed, points, status, exit_code, report_json, created)
                     VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)''',
                            (document['group'], document['mode'], document['level'], document.get('seed'),
                             document.get('points'), document['summary']['status'], exit_code,
                             json.dumps(document, sort_keys=True), get_pacific_now()))
        db.commit()
        return cursor.lastrowid
    except Exception as e:
        current_app.logger.error(f"Failed to log run: {e}")
        return None


def get_runs(limit=100, group_name=None):
    """Get recent runs, newest first"""
    db = get_db()
    if group_name:
        return db.execute('''SELECT id, group_name, mode, level, seed, points, status, exit_code, created
                             FROM runs WHERE group_name = ? ORDER BY id DESC LIMIT ?''',
                          (group_name, limit)).fetchall()
    return db.execute('''SELECT id, group_name, mode, level, seed, points, status, exit_code, created
                         FROM runs ORDER BY id DESC LIMIT ?''', (limit,)).fetchall()


def get_run_by_id(run_id):
    """Get one run including its report"""
    db = get_db()
    return db.execute('SELECT * FROM runs WHERE id = ?', (run_id,)).fetchone()

