"""
File utility functions for Orbitbook.

This module contains group-file discovery and safe report writing.
"""

import os
import tempfile

GROUP_FILE_EXTENSION = '.grp'


def list_group_files(data_dir):
    """
    Return the group data files in data_dir, sorted by file name.

    Args:
        data_dir (str): Directory holding *.grp files

    Returns:
        list: Absolute paths (empty when the directory does not exist)
    """
    if not data_dir or not os.path.isdir(data_dir):
        return []
    names = sorted(n for n in os.listdir(data_dir) if n.endswith(GROUP_FILE_EXTENSION))
    return [os.path.abspath(os.path.join(data_dir, n)) for n in names]


def write_report(path, text):
    """
    Write text to path atomically, creating parent directories.

    Args:
        path (str): Destination file
        text (str): Report contents
    """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix='.report-', suffix='.tmp')
    try:
        with os.fdopen(fd, 'w', encoding='utf-8') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
