import os

BASE_DIR = os.path.dirname(os.path.abspath(__file__))


def _heavy_groups():
    raw = os.environ.get('ORBITBOOK_HEAVY_GROUPS', 'G17,G18,G21,G27')
    return [g.strip() for g in raw.split(',') if g.strip()]


class Config:
    DATA_DIR = os.environ.get('ORBITBOOK_DATA_DIR') or os.path.join(BASE_DIR, 'data', 'groups')
    DATABASE = os.environ.get('ORBITBOOK_DATABASE_PATH', 'orbitbook.db')
    DEFAULT_LEVEL = os.environ.get('ORBITBOOK_DEFAULT_LEVEL', 'symbolic')
    DEFAULT_POINTS = int(os.environ.get('ORBITBOOK_DEFAULT_POINTS', '8'))
    DEFAULT_SEED = int(os.environ.get('ORBITBOOK_DEFAULT_SEED', '20240601'))
    HEAVY_GROUPS = _heavy_groups()
    REPORT_DIR = os.environ.get('ORBITBOOK_REPORT_DIR') or os.path.join(BASE_DIR, 'data', 'reports')
    TIMEZONE = os.environ.get('ORBITBOOK_TIMEZONE', 'US/Pacific')
    LOG_LEVEL = os.environ.get('ORBITBOOK_LOG_LEVEL', 'INFO')
