from pathlib import Path
from typing import List

from core.libs.experiment_config import experiment_preset
from core.libs.experiment_processor import SweepResult, eps_sweep
from core.libs.io_lib import write_snapshot, write_table
from core.libs.solver_errors import ED_SOLVER_EXCEPTION, ErrorType
from core.libs.stepper_lib import BCMode

from ._solver_command import SolverCommand


def parse_eps_list(text: str) -> List[float]:
    try:
        values = [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ED_SOLVER_EXCEPTION(f"Invalid eps list {text!r}", ErrorType.VALIDATION, key='eps')
    if not values:
        raise ED_SOLVER_EXCEPTION("Empty eps list", ErrorType.VALIDATION, key='eps')
    return values


def parse_bc_list(text: str) -> List[BCMode]:
    try:
        values = [BCMode(item.strip().lower()) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ED_SOLVER_EXCEPTION(f"Invalid bc list {text!r} (use dirichlet, mixed)", ErrorType.VALIDATION, key='bc')
    if not values:
        raise ED_SOLVER_EXCEPTION("Empty bc list", ErrorType.VALIDATION, key='bc')
    return values


def write_sweep(command, sweep: SweepResult, out_dir: Path, name: str, record: bool = False):
    for entry in sweep.entries:
        write_snapshot(entry.state, sweep.mesh, out_dir / f"{name}_eps{entry.eps:g}_{entry.bc_mode.value}_snapshot.csv")
    write_snapshot(sweep.reference, sweep.mesh, out_dir / f"{name}_reference_snapshot.csv")
    frame = sweep.to_frame()
    table = write_table(frame, out_dir / f"{name}_metrics.csv")
    command.stdout.write(frame.to_string(index=False, float_format=lambda v: f"{v:.3e}"))
    command.stdout.write(f"metrics: {table}")
    for entry in sweep.entries:
        command.record_summary(entry.summary, record)


class Command(SolverCommand):
    help = 'eps sweep against the eps = 0 mixed-BC reference (base parameters of experiment 3)'

    def add_arguments(self, parser):
        parser.add_argument('--eps', required=True, help='Comma-separated eps values, e.g. 0.1,0.01,1e-10')
        parser.add_argument('--bc', required=True, help='Comma-separated bc modes: dirichlet,mixed')
        self.add_set_argument(parser)
        self.add_output_arguments(parser)

    def solve(self, **options):
        eps_list = parse_eps_list(options['eps'])
        bc_list = parse_bc_list(options['bc'])
        base = self.with_overrides(experiment_preset(3).base, options).replace(experiment_id='sweep')
        sweep = eps_sweep(base, eps_list, bc_list)
        write_sweep(self, sweep, self.output_dir(options), 'sweep', record=options['record'])
