"""
Database connection management and initialization functions.

This module handles:
- Database connection management (get_db, close_db)
- Database initialization (init_db) for the run history
"""

import sqlite3
from flask import g, current_app


def get_db():
    """Get database connection from Flask's application context."""
    if 'db' not in g:
        g.db = sqlite3.connect(current_app.config['DATABASE'])
        g.db.row_factory = sqlite3.Row
    return g.db


def close_db(exception):
    """Close database connection."""
    db = g.pop('db', None)
    if db is not None:
        db.close()


def init_db():
    """Create the runs table and migrate older layouts."""
    db = get_db()

    db.execute('''CREATE TABLE IF NOT EXISTS runs (
        id INTEGER PRIMARY KEY AUTOINCREMENT,
        group_name TEXT NOT NULL,
        mode TEXT NOT NULL,
        level TEXT NOT NULL,
        status TEXT NOT NULL,
        exit_code INTEGER NOT NULL,
        report_json TEXT,
        created TIMESTAMP DEFAULT CURRENT_TIMESTAMP
    )''')

    # Columns added after the first release
    for column, kind in (('seed', 'INTEGER'), ('points', 'INTEGER')):
        try:
            db.execute(f'ALTER TABLE runs ADD COLUMN {column} {kind}')
        except sqlite3.OperationalError:
            # Column already exists
            pass

    db.execute('CREATE INDEX IF NOT EXISTS idx_runs_group ON runs (group_name, created)')
    db.commit()
