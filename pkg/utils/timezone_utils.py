"""
Timezone helpers for run timestamps (Pacific time by default).
"""
from datetime import datetime
import pytz


def get_pacific_timezone():
    """Get the configured run timezone (handles PST/PDT automatically)"""
    from config import Config
    try:
        return pytz.timezone(Config.TIMEZONE)
    except pytz.UnknownTimeZoneError:
        return pytz.timezone('America/Los_Angeles')


def get_pacific_now():
    """Get current time in the run timezone as a string"""
    return datetime.now(get_pacific_timezone()).strftime('%Y-%m-%d %H:%M:%S')

