"""
Shared plumbing of the solver management commands: output directory, artifact
files, optional RunSummary recording and the mapping of solver errors to exit codes.
"""

import logging
from pathlib import Path
from typing import Dict, Iterable, Optional

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.db import DatabaseError

from core.libs.experiment_config import ExperimentConfig
from core.libs.experiment_processor import ExperimentOutcome
from core.libs.io_lib import apply_overrides, parse_overrides, write_snapshot, write_summary
from core.libs.solver_errors import ED_SOLVER_EXCEPTION, ErrorType

logger = logging.getLogger(__name__)

EXIT_USER_ERROR = 1
EXIT_SOLVER_FAILURE = 2


def exit_code(error: ED_SOLVER_EXCEPTION) -> int:
    return EXIT_USER_ERROR if error.is_user_error else EXIT_SOLVER_FAILURE


def parse_set_options(items: Optional[Iterable[str]]) -> Dict[str, object]:
    """`--set key=value` items, validated with the config grammar (line = position of the item)."""
    return parse_overrides("\n".join(item.replace("=", " = ", 1) for item in items or []))


class SolverCommand(BaseCommand):
    """Base class: subclasses implement `solve(**options)` instead of `handle`."""

    def add_output_arguments(self, parser, record: bool = True):
        parser.add_argument('--out', default=None,
                            help='Output directory (default: ED_OUTPUT_DIR)')
        if record:
            parser.add_argument('--record', action='store_true',
                                help='Save the RunSummary to the database')

    def add_set_argument(self, parser):
        parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                            help='Override one config key (repeatable)')

    def handle(self, *args, **options):
        try:
            self.solve(**options)
        except ED_SOLVER_EXCEPTION as e:
            logger.error(f"{self.__module__.rsplit('.', 1)[-1]} failed: {e}")
            detail = f" (key: {e.key})" if e.key else ""
            raise CommandError(f"{e.err_type.value}: {e.message}{detail}", returncode=exit_code(e)) from e

    def solve(self, **options):
        raise NotImplementedError

    def output_dir(self, options) -> Path:
        return Path(options.get('out') or settings.ED_OUTPUT_DIR)

    def with_overrides(self, config: ExperimentConfig, options) -> ExperimentConfig:
        overrides = parse_set_options(options.get('overrides'))
        return apply_overrides(config, overrides) if overrides else config

    def record_summary(self, summary, record: bool = False):
        if not (record or settings.ED_RECORD_RUNS):
            return
        try:
            summary.save()
        except DatabaseError as e:
            raise ED_SOLVER_EXCEPTION(f"Cannot record run summary (did you run migrate?): {e}",
                                      ErrorType.IO) from e
        logger.info(f"Recorded {summary}")

    def write_outcome(self, outcome: ExperimentOutcome, out_dir: Path, name: str, record: bool = False):
        snapshot = write_snapshot(outcome.final, outcome.mesh, out_dir / f"{name}_snapshot.csv")
        summary = write_summary(outcome.summary, outcome.config, out_dir / f"{name}_summary.txt", outcome.checks)
        self.record_summary(outcome.summary, record)
        self.stdout.write(f"snapshot: {snapshot}")
        self.stdout.write(f"summary: {summary}")
        for check, value in outcome.checks.items():
            self.stdout.write(f"check {check}: {value}")
