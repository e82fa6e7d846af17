from core.libs.experiment_config import SweepTemplate, experiment_preset
from core.libs.experiment_processor import eps_sweep, run_experiment

from ._solver_command import SolverCommand
from .sweep import write_sweep


class Command(SolverCommand):
    help = 'Run preset experiment 1, 2 or 3 (3 is the eps sweep)'

    def add_arguments(self, parser):
        parser.add_argument('experiment_id', type=int, help='Preset number: 1, 2 or 3')
        self.add_set_argument(parser)
        self.add_output_arguments(parser)

    def solve(self, **options):
        preset = experiment_preset(options['experiment_id'])
        out_dir = self.output_dir(options)

        if isinstance(preset, SweepTemplate):
            template = SweepTemplate(base=self.with_overrides(preset.base, options),
                                     eps_list=preset.eps_list, bc_list=preset.bc_list)
            write_sweep(self, eps_sweep(template), out_dir, f"experiment{options['experiment_id']}",
                        record=options['record'])
            return

        config = self.with_overrides(preset, options)
        outcome = run_experiment(config)
        self.write_outcome(outcome, out_dir, f"experiment{config.experiment_id}", record=options['record'])
