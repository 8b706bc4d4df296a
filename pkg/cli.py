"""
Stand-alone orbitbook command.

Runs the commands of blueprints/cli_bp.py without the flask launcher:

    python cli.py verify --group G26 --mode standard
    python cli.py list-groups --format structured
"""
import sys

from app import app


def main(argv=None):
    with app.app_context():
        app.cli.main(args=argv if argv is not None else sys.argv[1:], prog_name='orbitbook')


if __name__ == "__main__":
    main()
