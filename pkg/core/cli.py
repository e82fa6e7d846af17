"""
Standalone entry point: `python -m core.cli <subcommand> ...`.

Same commands as `manage.py`, restricted to the solver subcommands and
returning the exit code instead of calling sys.exit.
"""

import os
import sys
from typing import List, Optional, TextIO

SUBCOMMANDS = ('run', 'experiment', 'sweep', 'mms')

USAGE = """usage: ed-solver <subcommand> [options]

  run --config PATH [--out DIR] [--record]
  experiment {1|2|3} [--set KEY=VALUE ...] [--out DIR] [--record]
  sweep --eps LIST --bc LIST [--set KEY=VALUE ...] [--out DIR] [--record]
  mms --levels K [--case NAME]
"""


def cli_main(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None,
             stderr: Optional[TextIO] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr

    if not argv or argv[0] not in SUBCOMMANDS:
        if argv:
            stderr.write(f"Unknown subcommand {argv[0]!r}\n")
        stderr.write(USAGE)
        return 1

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'ed_solver.settings')
    import django
    from django.core.management import call_command
    from django.core.management.base import CommandError

    django.setup()
    try:
        call_command(argv[0], *argv[1:], stdout=stdout, stderr=stderr)
    except CommandError as e:
        stderr.write(f"{e}\n")
        if e.returncode == 1 and str(e).startswith('Error:'):
            stderr.write(USAGE)
        return e.returncode
    return 0


if __name__ == '__main__':
    sys.exit(cli_main())
