#!/usr/bin/env python
"""chainpulse command-line entry point and Django's utility for everything else."""
import os
import sys

PIPELINE_COMMANDS = ('simulate', 'ingest', 'explore', 'forecast', 'classify', 'report')


def main():
    """Run a pipeline subcommand, or hand over to Django (e.g. ``test``)."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chainpulse.settings')
    try:
        import django
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    if len(sys.argv) > 1 and sys.argv[1] in PIPELINE_COMMANDS:
        django.setup()
        from cli.runner import run
        sys.exit(run(sys.argv[1:]))
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
